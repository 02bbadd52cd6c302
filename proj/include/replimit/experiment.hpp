#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "replimit/synth.hpp"
#include "replimit/training.hpp"

namespace replimit {

struct ExperimentConfig {
    SynthSpec dataset;                       // seed field is ignored; each run seed derives its own
    std::size_t fusion_n_base = 0;           // 0 = dataset.n_base
    std::size_t heldout_n = 0;               // 0 = dataset.n_base
    std::size_t n_gen = 0;                   // 0 = dataset.n_base
    std::vector<MitigationStrategy> strategies;  // report order, dual fusion already expanded
    std::vector<FusionConfig> fusion_weights;    // sweep applied to a bare "dual_fusion" entry
    std::vector<std::uint64_t> seeds{0};
    int t_max = kDefaultTMax;
    double beta1 = kDefaultBeta1;
    double beta_t = kDefaultBetaT;
    int steps = 20000;
    std::size_t batch = 32;
    double lr = 1e-3;
    DenoiserConfig net;                      // latent_dim is derived from the dataset shape
    std::size_t pool = 2;
    bool record_timings = false;

    std::size_t resolved_n_gen() const { return n_gen ? n_gen : dataset.n_base; }
};

// Unknown keys, bad types and unknown strategy names raise ContractError
// naming the offending field.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

std::string strategy_label(const MitigationStrategy& s);

struct RunResult {
    MitigationStrategy strategy;
    std::uint64_t seed = 0;
    double r = 0.0;
    double fd = 0.0;
    double final_loss = 0.0;
    std::size_t n_gen = 0;
    std::size_t n_train = 0;
    double wall_seconds = 0.0;
    std::vector<ToyImage> samples;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<RunResult> results;
};

using ProgressFn = std::function<void(const std::string& message)>;

RunResult run_single(const ExperimentConfig& config, const MitigationStrategy& strategy, std::uint64_t seed);
ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

// {"config": ..., "results": [...]}; wall time appears only with record_timings.
nlohmann::json to_json(const ExperimentReport& report);

}  // namespace replimit
