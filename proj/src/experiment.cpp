#include "replimit/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <numeric>

#include "replimit/errors.hpp"
#include "replimit/replication.hpp"

namespace replimit {

namespace {

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::uint64_t need_uint(const nlohmann::json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ContractError(field + ": expected a non-negative integer");
}

double need_number(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) throw ContractError(field + ": expected a number");
    return v.get<double>();
}

FusionConfig fusion_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_object()) throw ContractError(field + ": expected an object");
    FusionConfig f;
    for (const auto& [key, value] : j.items()) {
        if (key == "w_lat") f.w_lat = need_number(value, field + ".w_lat");
        else if (key == "w_emb") f.w_emb = need_number(value, field + ".w_emb");
        else if (key == "mode") {
            const auto m = value.is_string() ? value.get<std::string>() : std::string();
            if (m == "token") f.mode = FusionMode::TokenLevel;
            else if (m == "embedding") f.mode = FusionMode::EmbeddingLevel;
            else throw ContractError(field + ".mode: expected \"token\" or \"embedding\"");
        } else {
            throw ContractError(field + "." + key + ": unknown key");
        }
    }
    return f.clamped();
}

nlohmann::json fusion_to_json(const FusionConfig& f) {
    nlohmann::json j = {{"mode", f.mode == FusionMode::TokenLevel ? "token" : "embedding"}, {"w_lat", f.w_lat}};
    if (f.mode == FusionMode::EmbeddingLevel) j["w_emb"] = f.w_emb;
    return j;
}

double tail_mean(const std::vector<double>& v, std::size_t k) {
    if (v.empty()) return 0.0;
    k = std::min(k, v.size());
    return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(k), v.end(), 0.0) / static_cast<double>(k);
}

std::vector<ToyImage> images_of(const std::vector<SynthExample>& xs) {
    std::vector<ToyImage> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(x.image);
    return out;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ContractError("config: expected a JSON object");
    ExperimentConfig c;
    const nlohmann::json* raw_strategies = nullptr;
    for (const auto& [key, value] : j.items()) {
        if (key == "dataset") {
            c.dataset = synth_spec_from_json(value, "dataset");
        } else if (key == "strategies") {
            if (!value.is_array() || value.empty()) throw ContractError("strategies: expected a non-empty array");
            raw_strategies = &value;
        } else if (key == "fusion_weights") {
            if (!value.is_array()) throw ContractError("fusion_weights: expected an array");
            for (std::size_t i = 0; i < value.size(); ++i)
                c.fusion_weights.push_back(fusion_from_json(value[i], "fusion_weights[" + std::to_string(i) + "]"));
        } else if (key == "seeds") {
            if (!value.is_array() || value.empty()) throw ContractError("seeds: expected a non-empty array");
            c.seeds.clear();
            for (std::size_t i = 0; i < value.size(); ++i)
                c.seeds.push_back(need_uint(value[i], "seeds[" + std::to_string(i) + "]"));
        } else if (key == "t_max") {
            c.t_max = static_cast<int>(need_uint(value, key));
        } else if (key == "beta1") {
            c.beta1 = need_number(value, key);
        } else if (key == "beta_t") {
            c.beta_t = need_number(value, key);
        } else if (key == "steps") {
            c.steps = static_cast<int>(need_uint(value, key));
        } else if (key == "batch") {
            c.batch = need_uint(value, key);
        } else if (key == "lr") {
            c.lr = need_number(value, key);
        } else if (key == "hidden") {
            c.net.hidden = need_uint(value, key);
        } else if (key == "time_dim") {
            c.net.time_dim = need_uint(value, key);
        } else if (key == "text_dim") {
            c.net.text_dim = need_uint(value, key);
        } else if (key == "pool") {
            c.pool = need_uint(value, key);
        } else if (key == "n_gen") {
            c.n_gen = need_uint(value, key);
        } else if (key == "heldout_n") {
            c.heldout_n = need_uint(value, key);
        } else if (key == "fusion_n_base") {
            c.fusion_n_base = need_uint(value, key);
        } else if (key == "record_timings") {
            if (!value.is_boolean()) throw ContractError("record_timings: expected a boolean");
            c.record_timings = value.get<bool>();
        } else if (key == "comment") {
            // free text, ignored
        } else {
            throw ContractError(key + ": unknown config key");
        }
    }
    if (!raw_strategies) throw ContractError("strategies: missing");
    // A bare dual-fusion name expands over fusion_weights (default weights if absent).
    for (std::size_t i = 0; i < raw_strategies->size(); ++i) {
        const auto& entry = (*raw_strategies)[i];
        try {
            auto s = strategy_from_json(entry);
            if (entry.is_string() && std::holds_alternative<strategy::DualFusion>(s) && !c.fusion_weights.empty()) {
                for (const auto& w : c.fusion_weights) c.strategies.push_back(strategy::DualFusion{w});
            } else {
                c.strategies.push_back(std::move(s));
            }
        } catch (const ContractError& e) {
            throw ContractError("strategies[" + std::to_string(i) + "]: " + e.what());
        }
    }
    if (c.batch == 0) throw ContractError("batch: must be positive");
    if (c.t_max < 1) throw ContractError("t_max: must be >= 1");
    if (c.pool == 0 || c.dataset.h % c.pool || c.dataset.w % c.pool)
        throw ContractError("pool: must divide the dataset image size");
    if (!(c.lr > 0.0)) throw ContractError("lr: must be positive");
    if (c.net.hidden == 0 || c.net.time_dim < 2 || c.net.time_dim % 2 || c.net.text_dim == 0)
        throw ContractError("hidden/time_dim/text_dim: invalid network size");
    make_schedule(c.t_max, c.beta1, c.beta_t);  // validates beta range
    c.net.latent_dim = (c.dataset.h / c.pool) * (c.dataset.w / c.pool);
    return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    auto strategies = nlohmann::json::array();
    for (const auto& s : c.strategies) strategies.push_back(to_json(s));
    auto fusion = nlohmann::json::array();
    for (const auto& f : c.fusion_weights) fusion.push_back(fusion_to_json(f));
    auto dataset = to_json(c.dataset);
    dataset.erase("seed");
    return {
        {"dataset", dataset},
        {"fusion_n_base", c.fusion_n_base ? c.fusion_n_base : c.dataset.n_base},
        {"heldout_n", c.heldout_n ? c.heldout_n : c.dataset.n_base},
        {"n_gen", c.resolved_n_gen()},
        {"strategies", strategies},
        {"fusion_weights", fusion},
        {"seeds", c.seeds},
        {"t_max", c.t_max},
        {"beta1", c.beta1},
        {"beta_t", c.beta_t},
        {"steps", c.steps},
        {"batch", c.batch},
        {"lr", c.lr},
        {"hidden", c.net.hidden},
        {"time_dim", c.net.time_dim},
        {"text_dim", c.net.text_dim},
        {"pool", c.pool},
        {"record_timings", c.record_timings},
    };
}

std::string strategy_label(const MitigationStrategy& s) {
    const auto name = strategy_name(s);
    if (const auto* d = std::get_if<strategy::DualFusion>(&s)) {
        const auto& f = d->fusion;
        if (f.mode == FusionMode::TokenLevel) return name + "(token,w_lat=" + fmt_g(f.w_lat) + ")";
        return name + "(embedding,w_lat=" + fmt_g(f.w_lat) + ",w_emb=" + fmt_g(f.w_emb) + ")";
    }
    if (const auto* g = std::get_if<strategy::GaussianNoise>(&s)) return name + "(sigma=" + fmt_g(g->sigma) + ")";
    if (const auto* m = std::get_if<strategy::MultipleCaptions>(&s))
        return name + "(alternates=" + std::to_string(m->alternates) + ")";
    return name;
}

RunResult run_single(const ExperimentConfig& config, const MitigationStrategy& strategy, std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();

    SynthSpec train_spec = config.dataset;
    train_spec.seed = derive_seed(seed, 1);
    const auto train_examples = gen_synth_dataset(train_spec);
    const auto base = gen_synth_base(train_spec);

    SynthSpec fusion_spec = config.dataset;
    fusion_spec.family = ShapeFamily::Fusion;
    fusion_spec.n_base = config.fusion_n_base ? config.fusion_n_base : config.dataset.n_base;
    fusion_spec.dup_factor = 1;
    fusion_spec.dup_fraction = 0.0;
    fusion_spec.seed = derive_seed(seed, 2);
    const auto fusion_examples = gen_synth_base(fusion_spec);

    SynthSpec heldout_spec = config.dataset;
    heldout_spec.n_base = config.heldout_n ? config.heldout_n : config.dataset.n_base;
    heldout_spec.dup_factor = 1;
    heldout_spec.dup_fraction = 0.0;
    heldout_spec.seed = derive_seed(seed, 3);
    const auto heldout = gen_synth_base(heldout_spec);

    auto to_set = [&](const std::vector<SynthExample>& xs) {
        std::vector<std::string> captions;
        for (const auto& x : xs) captions.push_back(x.caption);
        return make_training_set(images_of(xs), captions, config.pool);
    };
    const auto train_set = to_set(train_examples);
    const auto fusion_set = to_set(fusion_examples);

    DenoiserConfig net_cfg = config.net;
    net_cfg.latent_dim = train_set.shape.dim();
    auto net = DenoiserNet::initialized(net_cfg, derive_seed(seed, 4));
    const auto schedule = make_schedule(config.t_max, config.beta1, config.beta_t);
    TrainConfig tc;
    tc.steps = config.steps;
    tc.batch = config.batch;
    tc.adam.lr = config.lr;
    const auto losses = train(net, train_set, &fusion_set, strategy, schedule, tc, derive_seed(seed, 5));

    const auto n_gen = config.resolved_n_gen();
    std::vector<std::string> captions;
    std::vector<std::uint64_t> seeds;
    const auto sample_base = derive_seed(seed, 6);
    for (std::size_t i = 0; i < n_gen; ++i) {
        captions.push_back(base[i % base.size()].caption);
        seeds.push_back(derive_seed(sample_base, i));
    }
    RunResult out;
    out.strategy = strategy;
    out.seed = seed;
    out.samples = sample_images(net, captions, seeds, schedule, train_set.shape);

    const auto train_features = toy_feature_matrix(images_of(base));
    const auto gen_features = toy_feature_matrix(out.samples);
    const auto rep = replication_score(similarity_scores(train_features, gen_features));
    out.r = rep.r;
    out.n_gen = n_gen;
    out.n_train = train_examples.size();
    out.fd = frechet_distance(fit_gaussian(gen_features), fit_gaussian(toy_feature_matrix(images_of(heldout))));
    out.final_loss = tail_mean(losses, 100);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
    const auto& strategies = config.strategies;
    if (strategies.empty()) throw ContractError("run_experiment: no strategies");
    ExperimentReport report{config, {}};
    for (const auto& s : strategies) {
        for (auto seed : config.seeds) {
            if (progress) progress("training " + strategy_label(s) + " seed " + std::to_string(seed));
            report.results.push_back(run_single(config, s, seed));
            if (progress) progress("  R=" + fmt_g(report.results.back().r) + " FD=" + fmt_g(report.results.back().fd));
        }
    }
    return report;
}

nlohmann::json to_json(const ExperimentReport& report) {
    auto results = nlohmann::json::array();
    for (const auto& r : report.results) {
        nlohmann::json j = {
            {"strategy", to_json(r.strategy)},
            {"label", strategy_label(r.strategy)},
            {"seed", r.seed},
            {"R", r.r},
            {"FD", r.fd},
            {"final_loss", r.final_loss},
            {"n_gen", r.n_gen},
            {"n_train", r.n_train},
        };
        if (report.config.record_timings) j["wall_seconds"] = r.wall_seconds;
        results.push_back(std::move(j));
    }
    return {{"config", to_json(report.config)}, {"results", results}};
}

}  // namespace replimit
