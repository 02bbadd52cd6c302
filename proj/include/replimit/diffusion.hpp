#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "replimit/image.hpp"

namespace replimit {

// Linear beta schedule with cumulative products kept in double precision.
// Index t runs 1..t_max; the vectors are stored 0-based.
struct DiffusionSchedule {
    int t_max = 0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    double beta(int t) const { return betas[static_cast<std::size_t>(t - 1)]; }
    double alpha(int t) const { return alphas[static_cast<std::size_t>(t - 1)]; }
    double alpha_bar(int t) const { return alpha_bars[static_cast<std::size_t>(t - 1)]; }
};

inline constexpr int kDefaultTMax = 100;
inline constexpr double kDefaultBeta1 = 1e-4;
inline constexpr double kDefaultBetaT = 0.02;

DiffusionSchedule make_schedule(int t_max = kDefaultTMax, double beta1 = kDefaultBeta1, double beta_t = kDefaultBetaT);

// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
std::vector<double> forward_sample(std::span<const double> x0, int t, std::span<const double> eps,
                                   const DiffusionSchedule& schedule);

// Block-mean pooling encoder and nearest-neighbour decoder standing in for the VAE.
struct LatentShape {
    std::size_t image_h = 16;
    std::size_t image_w = 16;
    std::size_t pool = 2;

    std::size_t h() const { return image_h / pool; }
    std::size_t w() const { return image_w / pool; }
    std::size_t dim() const { return h() * w(); }
};

std::vector<double> visual_encode(const ToyImage& image, std::size_t pool = 2);
ToyImage visual_decode(std::span<const double> latent, const LatentShape& shape);

// Hashed signed bag of tokens, L2-normalized (empty captions give the zero vector).
inline constexpr std::size_t kDefaultTextDim = 64;
std::vector<double> text_encode(std::string_view caption, std::size_t d_text = kDefaultTextDim);

// (1 - w) a + w b, without renormalization.
std::vector<double> fuse_latents(std::span<const double> lat_ft, std::span<const double> lat_fu, double w_lat);
std::vector<double> fuse_embeddings(std::span<const double> e_ft, std::span<const double> e_fu, double w_emb);

// Appends the fusion caption after a single space; leading/trailing spaces trimmed.
std::string token_fuse(std::string_view y_ft, std::string_view y_fu);

}  // namespace replimit
