#include "replimit/training.hpp"

#include <algorithm>
#include <cmath>

#include "replimit/annotate.hpp"
#include "replimit/errors.hpp"
#include "replimit/generalize.hpp"

namespace replimit {

FusionConfig FusionConfig::clamped() const {
    return {mode, std::clamp(w_lat, 0.0, 1.0), std::clamp(w_emb, 0.0, 1.0)};
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

const std::vector<std::string>& random_caption_vocabulary() {
    static const std::vector<std::string> vocab = [] {
        const auto& lists = bundled_word_lists();
        auto v = lists.nouns;
        v.insert(v.end(), lists.verb_list.begin(), lists.verb_list.end());
        return v;
    }();
    return vocab;
}

}  // namespace

std::string strategy_name(const MitigationStrategy& s) {
    return std::visit(overloaded{
                          [](const strategy::None&) { return std::string("none"); },
                          [](const strategy::DualFusion&) { return std::string("dual_fusion"); },
                          [](const strategy::GaussianNoise&) { return std::string("gaussian_noise"); },
                          [](const strategy::RandomCaption&) { return std::string("random_caption"); },
                          [](const strategy::CaptionWordRepeat&) { return std::string("caption_word_repeat"); },
                          [](const strategy::MultipleCaptions&) { return std::string("multiple_captions"); },
                      },
                      s);
}

nlohmann::json to_json(const MitigationStrategy& s) {
    nlohmann::json j = {{"name", strategy_name(s)}};
    std::visit(overloaded{
                   [&](const strategy::DualFusion& d) {
                       j["mode"] = d.fusion.mode == FusionMode::TokenLevel ? "token" : "embedding";
                       j["w_lat"] = d.fusion.w_lat;
                       if (d.fusion.mode == FusionMode::EmbeddingLevel) j["w_emb"] = d.fusion.w_emb;
                   },
                   [&](const strategy::GaussianNoise& g) { j["sigma"] = g.sigma; },
                   [&](const strategy::MultipleCaptions& m) { j["alternates"] = m.alternates; },
                   [](const auto&) {},
               },
               s);
    return j;
}

MitigationStrategy strategy_from_json(const nlohmann::json& j) {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
    if (j.is_string()) {
        name = j.get<std::string>();
    } else if (j.is_object() && j.contains("name") && j["name"].is_string()) {
        name = j["name"].get<std::string>();
        params = j;
    } else {
        throw ContractError("strategies: each entry must be a name or an object with a 'name' field");
    }
    auto number = [&](const char* key, double fallback) {
        if (!params.contains(key)) return fallback;
        if (!params[key].is_number()) throw ContractError(std::string("strategies.") + key + ": expected a number");
        return params[key].get<double>();
    };
    if (name == "none" || name == "baseline") return strategy::None{};
    if (name == "dual_fusion" || name == "df") {
        FusionConfig f;
        const auto mode = params.value("mode", std::string("embedding"));
        if (mode == "token") f.mode = FusionMode::TokenLevel;
        else if (mode == "embedding") f.mode = FusionMode::EmbeddingLevel;
        else throw ContractError("strategies.mode: unknown fusion mode '" + mode + "'");
        f.w_lat = number("w_lat", f.w_lat);
        f.w_emb = number("w_emb", f.w_emb);
        return strategy::DualFusion{f.clamped()};
    }
    if (name == "gaussian_noise" || name == "gn") return strategy::GaussianNoise{number("sigma", 0.1)};
    if (name == "random_caption" || name == "rc") return strategy::RandomCaption{};
    if (name == "caption_word_repeat" || name == "cwr") return strategy::CaptionWordRepeat{};
    if (name == "multiple_captions" || name == "mc")
        return strategy::MultipleCaptions{static_cast<std::size_t>(number("alternates", 20))};
    throw ContractError("strategies.name: unknown strategy '" + name + "'");
}

TrainingSet make_training_set(const std::vector<ToyImage>& images, const std::vector<std::string>& captions,
                              std::size_t pool) {
    if (images.size() != captions.size()) throw ContractError("make_training_set: images and captions differ in count");
    if (images.empty()) throw ContractError("make_training_set: empty dataset");
    TrainingSet set;
    set.shape = {images.front().h, images.front().w, pool};
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].h != set.shape.image_h || images[i].w != set.shape.image_w)
            throw ContractError("make_training_set: images differ in size");
        set.examples.push_back({visual_encode(images[i], pool), captions[i], {}});
    }
    return set;
}

Conditioning apply_strategy(const TrainingExample& example, const MitigationStrategy& strategy,
                            const TrainingSet* fusion, std::size_t text_dim, Rng& aug) {
    return std::visit(
        overloaded{
            [&](const strategy::None&) { return Conditioning{example.latent, text_encode(example.caption, text_dim)}; },
            [&](const strategy::DualFusion& d) {
                if (!fusion || fusion->examples.empty())
                    throw ContractError("dual fusion requires a non-empty fusion dataset");
                const auto& fu = fusion->examples[aug.below(fusion->examples.size())];
                const auto cfg = d.fusion.clamped();
                Conditioning c;
                c.clean_latent = fuse_latents(example.latent, fu.latent, cfg.w_lat);
                if (cfg.mode == FusionMode::TokenLevel) {
                    c.text = text_encode(token_fuse(example.caption, fu.caption), text_dim);
                } else {
                    c.text = fuse_embeddings(text_encode(example.caption, text_dim), text_encode(fu.caption, text_dim),
                                             cfg.w_emb);
                }
                return c;
            },
            [&](const strategy::GaussianNoise& g) {
                Conditioning c{example.latent, text_encode(example.caption, text_dim)};
                double ss = 0.0;
                for (double v : c.text) ss += v * v;
                const double sigma = g.sigma * std::sqrt(ss / static_cast<double>(text_dim));
                for (double& v : c.text) v += sigma * aug.normal();
                return c;
            },
            [&](const strategy::RandomCaption&) {
                const auto& vocab = random_caption_vocabulary();
                const auto n = tokenize(example.caption).size();
                std::vector<std::string> words;
                for (std::size_t i = 0; i < n; ++i) words.push_back(vocab[aug.below(vocab.size())]);
                return Conditioning{example.latent, text_encode(join_words(words), text_dim)};
            },
            [&](const strategy::CaptionWordRepeat&) {
                auto words = tokenize(example.caption);
                if (!words.empty()) {
                    const auto pick = words[aug.below(words.size())];
                    const auto at = aug.below(words.size() + 1);
                    words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), pick);
                }
                return Conditioning{example.latent, text_encode(join_words(words), text_dim)};
            },
            [&](const strategy::MultipleCaptions& m) {
                const auto generated =
                    example.alternates.empty() ? mock_paraphrases(example.caption, std::max<std::size_t>(m.alternates, 1))
                                               : std::vector<std::string>{};
                const auto& pool = example.alternates.empty() ? generated : example.alternates;
                return Conditioning{example.latent, text_encode(pool[aug.below(pool.size())], text_dim)};
            },
        },
        strategy);
}

PreparedBatch prepare_batch(std::span<const std::size_t> indices, const TrainingSet& data,
                            const MitigationStrategy& strategy, const TrainingSet* fusion,
                            const DiffusionSchedule& schedule, std::size_t text_dim, TrainingRngs& rngs) {
    if (indices.empty()) throw ContractError("prepare_batch: empty batch");
    const auto batch = static_cast<Eigen::Index>(indices.size());
    const auto dim = static_cast<Eigen::Index>(data.shape.dim());
    PreparedBatch b;
    b.noisy.resize(batch, dim);
    b.noise.resize(batch, dim);
    b.text.resize(batch, static_cast<Eigen::Index>(text_dim));
    b.steps.resize(indices.size());
    std::vector<double> eps(static_cast<std::size_t>(dim)), x0(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto& ex = data.examples.at(indices[static_cast<std::size_t>(i)]);
        const int t = static_cast<int>(rngs.main.between(1, schedule.t_max));
        for (double& e : eps) e = rngs.main.normal();
        const auto cond = apply_strategy(ex, strategy, fusion, text_dim, rngs.aug);
        for (std::size_t k = 0; k < x0.size(); ++k) x0[k] = 2.0 * cond.clean_latent[k] - 1.0;
        const auto xt = forward_sample(x0, t, eps, schedule);
        for (Eigen::Index k = 0; k < dim; ++k) {
            b.noisy(i, k) = xt[static_cast<std::size_t>(k)];
            b.noise(i, k) = eps[static_cast<std::size_t>(k)];
        }
        for (Eigen::Index k = 0; k < b.text.cols(); ++k) b.text(i, k) = cond.text[static_cast<std::size_t>(k)];
        b.steps[static_cast<std::size_t>(i)] = t;
    }
    return b;
}

double train_step(DenoiserNet& net, Adam& optimizer, std::span<const std::size_t> indices, const TrainingSet& data,
                  const MitigationStrategy& strategy, const TrainingSet* fusion, const DiffusionSchedule& schedule,
                  TrainingRngs& rngs) {
    const auto& cfg = net.config();
    if (cfg.latent_dim != data.shape.dim()) throw ContractError("train_step: latent dimension mismatch");
    const auto b = prepare_batch(indices, data, strategy, fusion, schedule, cfg.text_dim, rngs);
    const auto input = assemble_input(b.noisy, b.steps, b.text, cfg);
    Eigen::VectorXd grad;
    const double loss = net.loss_and_gradient(input, b.noise, grad);
    optimizer.step(net.params(), grad);
    return loss;
}

std::vector<double> train(DenoiserNet& net, const TrainingSet& data, const TrainingSet* fusion,
                          const MitigationStrategy& strategy, const DiffusionSchedule& schedule,
                          const TrainConfig& config, std::uint64_t seed) {
    if (config.batch == 0) throw ContractError("train: batch must be positive");
    if (data.examples.empty()) throw ContractError("train: empty dataset");
    if (std::holds_alternative<strategy::DualFusion>(strategy) && (!fusion || fusion->examples.empty()))
        throw ContractError("train: dual fusion requires a non-empty fusion dataset");

    // Paraphrase pools are fixed per example for the whole run.
    const TrainingSet* active = &data;
    TrainingSet with_alternates;
    if (const auto* mc = std::get_if<strategy::MultipleCaptions>(&strategy)) {
        with_alternates = data;
        for (auto& ex : with_alternates.examples)
            if (ex.alternates.empty()) ex.alternates = mock_paraphrases(ex.caption, std::max<std::size_t>(mc->alternates, 1));
        active = &with_alternates;
    }

    Adam optimizer(net.params().size(), config.adam);
    TrainingRngs rngs(seed);
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(config.steps));
    std::vector<std::size_t> indices(config.batch);
    for (int step = 0; step < config.steps; ++step) {
        for (auto& idx : indices) idx = rngs.main.below(active->examples.size());
        losses.push_back(train_step(net, optimizer, indices, *active, strategy, fusion, schedule, rngs));
    }
    if (!net.all_finite()) throw Error("training diverged: non-finite parameters");
    return losses;
}

std::vector<ToyImage> sample_images(const DenoiserNet& net, const std::vector<std::string>& captions,
                                    std::span<const std::uint64_t> seeds, const DiffusionSchedule& schedule,
                                    const LatentShape& shape) {
    if (captions.size() != seeds.size()) throw ContractError("sample_images: captions and seeds differ in count");
    const auto& cfg = net.config();
    if (cfg.latent_dim != shape.dim()) throw ContractError("sample_images: latent shape does not match the network");
    if (captions.empty()) return {};
    const auto batch = static_cast<Eigen::Index>(captions.size());
    const auto dim = static_cast<Eigen::Index>(shape.dim());

    Eigen::MatrixXd text(batch, static_cast<Eigen::Index>(cfg.text_dim));
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto e = text_encode(captions[static_cast<std::size_t>(i)], cfg.text_dim);
        for (Eigen::Index k = 0; k < text.cols(); ++k) text(i, k) = e[static_cast<std::size_t>(k)];
    }
    std::vector<Rng> rngs;
    rngs.reserve(captions.size());
    for (auto s : seeds) rngs.emplace_back(s);

    Eigen::MatrixXd x(batch, dim);
    for (Eigen::Index i = 0; i < batch; ++i)
        for (Eigen::Index k = 0; k < dim; ++k) x(i, k) = rngs[static_cast<std::size_t>(i)].normal();

    std::vector<int> steps(captions.size());
    for (int t = schedule.t_max; t >= 1; --t) {
        std::fill(steps.begin(), steps.end(), t);
        const Eigen::MatrixXd eps_hat = net.forward(assemble_input(x, steps, text, cfg));
        const double beta = schedule.beta(t), alpha = schedule.alpha(t), abar = schedule.alpha_bar(t);
        const double coef = beta / std::sqrt(1.0 - abar);
        x = (x - coef * eps_hat) / std::sqrt(alpha);
        if (t > 1) {
            const double sigma = std::sqrt(beta * (1.0 - schedule.alpha_bar(t - 1)) / (1.0 - abar));
            for (Eigen::Index i = 0; i < batch; ++i)
                for (Eigen::Index k = 0; k < dim; ++k) x(i, k) += sigma * rngs[static_cast<std::size_t>(i)].normal();
        }
    }

    std::vector<ToyImage> images;
    images.reserve(captions.size());
    std::vector<double> latent(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < batch; ++i) {
        for (Eigen::Index k = 0; k < dim; ++k) latent[static_cast<std::size_t>(k)] = 0.5 * (x(i, k) + 1.0);
        images.push_back(visual_decode(latent, shape));
    }
    return images;
}

ToyImage sample(const DenoiserNet& net, const std::string& caption, const DiffusionSchedule& schedule,
                std::uint64_t seed, const LatentShape& shape) {
    const std::uint64_t seeds[] = {seed};
    return sample_images(net, {caption}, seeds, schedule, shape).front();
}

nlohmann::json model_to_json(const DenoiserNet& net, const DiffusionSchedule& schedule, const LatentShape& shape) {
    const auto& c = net.config();
    const auto& p = net.params();
    return {
        {"format", "replimit-denoiser"},
        {"version", 1},
        {"arch", {{"latent_dim", c.latent_dim}, {"time_dim", c.time_dim}, {"text_dim", c.text_dim}, {"hidden", c.hidden}}},
        {"schedule", {{"t_max", schedule.t_max}, {"beta1", schedule.betas.front()}, {"beta_t", schedule.betas.back()}}},
        {"shape", {{"image_h", shape.image_h}, {"image_w", shape.image_w}, {"pool", shape.pool}}},
        {"params", std::vector<double>(p.data(), p.data() + p.size())},
    };
}

SavedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "replimit-denoiser") throw ContractError("not a replimit denoiser model");
        DenoiserConfig c;
        const auto& a = j.at("arch");
        c.latent_dim = a.at("latent_dim");
        c.time_dim = a.at("time_dim");
        c.text_dim = a.at("text_dim");
        c.hidden = a.at("hidden");
        const auto& s = j.at("schedule");
        auto schedule = make_schedule(s.at("t_max"), s.at("beta1"), s.at("beta_t"));
        const auto& sh = j.at("shape");
        LatentShape shape{sh.at("image_h"), sh.at("image_w"), sh.at("pool")};
        DenoiserNet net(c);
        const auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != c.param_count()) throw ContractError("model parameter count does not match architecture");
        for (std::size_t i = 0; i < params.size(); ++i) net.params()[static_cast<Eigen::Index>(i)] = params[i];
        if (shape.dim() != c.latent_dim) throw ContractError("model latent shape does not match architecture");
        return {std::move(net), std::move(schedule), shape};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
}

}  // namespace replimit
