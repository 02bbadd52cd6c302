#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "replimit/denoiser.hpp"
#include "replimit/diffusion.hpp"
#include "replimit/image.hpp"
#include "replimit/rng.hpp"

namespace replimit {

enum class FusionMode { TokenLevel, EmbeddingLevel };

struct FusionConfig {
    FusionMode mode = FusionMode::EmbeddingLevel;
    double w_lat = 0.1;
    double w_emb = 0.5;  // unused at token level

    FusionConfig clamped() const;
};

namespace strategy {
struct None {};
struct DualFusion {
    FusionConfig fusion;
};
struct GaussianNoise {
    double sigma = 0.1;  // fraction of the embedding RMS
};
struct RandomCaption {};
struct CaptionWordRepeat {};
struct MultipleCaptions {
    std::size_t alternates = 20;
};
}  // namespace strategy

using MitigationStrategy = std::variant<strategy::None, strategy::DualFusion, strategy::GaussianNoise,
                                        strategy::RandomCaption, strategy::CaptionWordRepeat, strategy::MultipleCaptions>;

std::string strategy_name(const MitigationStrategy& s);
nlohmann::json to_json(const MitigationStrategy& s);
// Accepts a bare name ("none", "gn", ...) or an object {"name": ..., params}.
MitigationStrategy strategy_from_json(const nlohmann::json& j);

struct TrainingExample {
    std::vector<double> latent;  // visual_encode output, values in [0,1]
    std::string caption;
    std::vector<std::string> alternates;  // multiple-captions pool; empty = generated on demand
};

struct TrainingSet {
    LatentShape shape;
    std::vector<TrainingExample> examples;
};

TrainingSet make_training_set(const std::vector<ToyImage>& images, const std::vector<std::string>& captions,
                              std::size_t pool = 2);

// Independent streams: `main` drives batch indices, steps and noise; `aug`
// drives every strategy-specific draw, so caption-side strategies leave the
// latent pathway untouched.
struct TrainingRngs {
    Rng main;
    Rng aug;
    explicit TrainingRngs(std::uint64_t seed) : main(derive_seed(seed, 11)), aug(derive_seed(seed, 12)) {}
};

// Caption and conditioning pair after applying a strategy to one example.
struct Conditioning {
    std::vector<double> clean_latent;  // [0,1] latent fed to the forward process
    std::vector<double> text;          // text embedding
};

Conditioning apply_strategy(const TrainingExample& example, const MitigationStrategy& strategy,
                            const TrainingSet* fusion, std::size_t text_dim, Rng& aug);

struct PreparedBatch {
    Eigen::MatrixXd noisy;  // model-space x_t, one row per sample
    Eigen::MatrixXd noise;  // epsilon targets
    Eigen::MatrixXd text;
    std::vector<int> steps;
};

// Latents are mapped to model space (2 x - 1) before noising.
PreparedBatch prepare_batch(std::span<const std::size_t> indices, const TrainingSet& data,
                            const MitigationStrategy& strategy, const TrainingSet* fusion,
                            const DiffusionSchedule& schedule, std::size_t text_dim, TrainingRngs& rngs);

// One Adam update on a batch; returns the batch loss before the update.
double train_step(DenoiserNet& net, Adam& optimizer, std::span<const std::size_t> indices, const TrainingSet& data,
                  const MitigationStrategy& strategy, const TrainingSet* fusion, const DiffusionSchedule& schedule,
                  TrainingRngs& rngs);

struct TrainConfig {
    int steps = 20000;
    std::size_t batch = 32;
    AdamConfig adam;
};

// Full loop with uniformly drawn batches. Returns the per-step loss trace.
std::vector<double> train(DenoiserNet& net, const TrainingSet& data, const TrainingSet* fusion,
                          const MitigationStrategy& strategy, const DiffusionSchedule& schedule,
                          const TrainConfig& config, std::uint64_t seed);

// Ancestral sampling from t = T down to 1, one image per (caption, seed).
std::vector<ToyImage> sample_images(const DenoiserNet& net, const std::vector<std::string>& captions,
                                    std::span<const std::uint64_t> seeds, const DiffusionSchedule& schedule,
                                    const LatentShape& shape);
ToyImage sample(const DenoiserNet& net, const std::string& caption, const DiffusionSchedule& schedule,
                std::uint64_t seed, const LatentShape& shape);

// Model persistence: JSON with architecture, schedule, latent shape and a flat parameter array.
struct SavedModel {
    DenoiserNet net;
    DiffusionSchedule schedule;
    LatentShape shape;
};
nlohmann::json model_to_json(const DenoiserNet& net, const DiffusionSchedule& schedule, const LatentShape& shape);
SavedModel model_from_json(const nlohmann::json& j);

}  // namespace replimit
