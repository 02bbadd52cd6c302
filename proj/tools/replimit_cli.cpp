#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "replimit/errors.hpp"
#include "replimit/experiment.hpp"
#include "replimit/generalize.hpp"
#include "replimit/genmetrics.hpp"
#include "replimit/image.hpp"
#include "replimit/lexicon.hpp"
#include "replimit/replication.hpp"
#include "replimit/synth.hpp"
#include "replimit/tensor_io.hpp"
#include "replimit/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace replimit;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string lexicon;
    std::string output;  // empty or "-" means standard output
};

bool to_stdout(const std::string& path) { return path.empty() || path == "-"; }

void emit_text(const std::string& path, const std::string& text) {
    if (to_stdout(path)) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << text;
    if (!out) throw FormatError("short write to " + path);
}

void emit_json(const std::string& path, const json& j) { emit_text(path, j.dump(2) + "\n"); }

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

Lexicon require_lexicon(const Globals& g, const char* cmd) {
    if (g.lexicon.empty()) throw ContractError(std::string(cmd) + ": --lexicon is required");
    return load_lexicon(g.lexicon);
}

// Images come from an RLTN tensor (N x H x W); features are toy descriptors.
FeatureMatrix features_from(const std::string& feature_path, const std::string& image_path, const char* which) {
    if (!feature_path.empty() && !image_path.empty())
        throw ContractError(std::string(which) + ": give features or images, not both");
    if (!feature_path.empty()) return load_features(feature_path);
    if (!image_path.empty()) return toy_feature_matrix(tensor_to_images(load_tensor(image_path)));
    throw ContractError(std::string(which) + ": features or images are required");
}

std::vector<std::string> captions_of(const std::vector<CaptionRecord>& records) {
    std::vector<std::string> out;
    for (const auto& r : records) out.push_back(r.caption);
    return out;
}

TrainingSet load_training_set(const std::string& images, const std::string& captions, std::size_t pool) {
    const auto imgs = tensor_to_images(load_tensor(images));
    const auto recs = read_caption_jsonl_file(captions);
    if (imgs.size() != recs.size())
        throw ContractError("image count " + std::to_string(imgs.size()) + " does not match caption count " +
                            std::to_string(recs.size()));
    return make_training_set(imgs, captions_of(recs), pool);
}

MitigationStrategy parse_strategy_arg(const std::string& s) {
    const auto trimmed = s.find_first_not_of(" \t");
    if (trimmed != std::string::npos && s[trimmed] == '{') {
        try {
            return strategy_from_json(json::parse(s));
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("--strategy: ") + e.what());
        }
    }
    return strategy_from_json(s);
}

std::string file_label(const MitigationStrategy& s) {
    std::string out;
    for (char c : strategy_label(s)) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') out += c;
        else if (c == '=' || c == ',' || c == '(') out += '_';
    }
    return out;
}

// ------------------------------------------------------------------ subcommands

void add_import_lexicon(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("import-lexicon", "Build a lexicon TSV from a WordNet noun database");
    static std::string dir;
    static std::size_t top_k = kDefaultGlobalsTopK;
    cmd->add_option("--wordnet", dir, "Directory holding data.noun and index.noun")->required();
    cmd->add_option("--top-k", top_k, "Most frequent lemmas used for the global averages");
    cmd->callback([&g] { emit_text(g.output, format_lexicon_tsv(import_wordnet(dir, top_k))); });
}

void add_score(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("score", "Generality scores for a caption JSONL corpus");
    static std::string captions;
    static bool per_caption = false;
    cmd->add_option("--captions", captions, "JSONL with id and caption fields")->required();
    cmd->add_flag("--per-caption", per_caption, "Include one report per caption");
    cmd->callback([&g] {
        const auto lex = require_lexicon(g, "score");
        auto report = to_json(score_corpus(read_caption_jsonl_file(captions), lex), per_caption);
        report["config"] = {{"captions", captions}, {"lexicon", g.lexicon}, {"per_caption", per_caption}};
        emit_json(g.output, report);
    });
}

void add_generalize(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("generalize", "Rewrite captions at a lower specificity");
    static std::string captions, level = "general", cache_path, model = "gpt-3.5-turbo";
    static bool mock = false;
    static int max_retries = 2;
    cmd->add_option("--captions", captions, "JSONL with id and caption fields")->required();
    cmd->add_option("--level", level, "general or five-word");
    cmd->add_flag("--mock", mock, "Offline rule-based rewriter (needs --lexicon)");
    cmd->add_option("--cache", cache_path, "JSONL response cache");
    cmd->add_option("--model", model, "Model name sent to the provider");
    cmd->add_option("--max-retries", max_retries, "Extra requests when a five-word reply is too long");
    cmd->callback([&g] {
        const auto lvl = parse_generality_level(level);
        const auto records = read_caption_jsonl_file(captions);
        std::optional<ResponseCache> cache;
        if (!cache_path.empty()) cache.emplace(cache_path);
        std::optional<Lexicon> lex;
        std::unique_ptr<ChatClient> client;
        if (mock) {
            lex = require_lexicon(g, "generalize --mock");
            client = std::make_unique<MockChatClient>(*lex);
        } else {
            client = std::make_unique<HttpChatClient>(HttpClientConfig::from_environment());
        }
        std::string out;
        for (const auto& rec : batch_generalize(records, lvl, *client, cache ? &*cache : nullptr, model, max_retries))
            out += rec.dump() + "\n";
        emit_text(g.output, out);
    });
}

void add_features(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("features", "Toy descriptors for an image tensor");
    static std::string images;
    cmd->add_option("--images", images, "RLTN tensor of shape N x H x W")->required();
    cmd->callback([&g] {
        if (to_stdout(g.output)) throw ContractError("features: --output PATH is required for binary output");
        const auto f = toy_feature_matrix(tensor_to_images(load_tensor(images)));
        save_features(f, g.output);
        emit_json("-", {{"config", {{"images", images}, {"output", g.output}}}, {"n", f.n()}, {"d", f.d()}});
    });
}

void add_repscore(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("repscore", "Replication score of generated against training features");
    static std::string train_f, gen_f, train_i, gen_i;
    static double quantile = 0.95;
    cmd->add_option("--train-features", train_f);
    cmd->add_option("--gen-features", gen_f);
    cmd->add_option("--train-images", train_i, "RLTN tensor; toy descriptors are computed");
    cmd->add_option("--gen-images", gen_i, "RLTN tensor; toy descriptors are computed");
    cmd->add_flag("--toy-features", "Accepted for clarity; images always use toy descriptors");
    cmd->add_option("--quantile", quantile);
    cmd->callback([&g] {
        const auto train = features_from(train_f, train_i, "training set");
        const auto gen = features_from(gen_f, gen_i, "generated set");
        const auto r = replication_score(similarity_scores(train, gen), quantile);
        emit_json(g.output, {{"R", r.r},
                             {"n_gen", r.n_gen},
                             {"n_train", train.n()},
                             {"config",
                              {{"train_features", train_f},
                               {"gen_features", gen_f},
                               {"train_images", train_i},
                               {"gen_images", gen_i},
                               {"quantile", quantile}}}});
    });
}

void add_fd(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("fd", "Frechet distance between Gaussian fits of two feature sets");
    static std::string a_f, b_f, a_i, b_i;
    cmd->add_option("--features-a", a_f);
    cmd->add_option("--features-b", b_f);
    cmd->add_option("--images-a", a_i);
    cmd->add_option("--images-b", b_i);
    cmd->callback([&g] {
        const auto a = features_from(a_f, a_i, "set a");
        const auto b = features_from(b_f, b_i, "set b");
        const double fd = frechet_distance(fit_gaussian(a), fit_gaussian(b));
        emit_json(g.output, {{"FD", fd},
                             {"n_a", a.n()},
                             {"n_b", b.n()},
                             {"config", {{"features_a", a_f}, {"features_b", b_f}, {"images_a", a_i}, {"images_b", b_i}}}});
    });
}

void add_synth(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("synth", "Generate a synthetic captioned image dataset");
    static std::string config, captions_out, style, family;
    static std::optional<std::size_t> n_base, dup_factor, h, w;
    static std::optional<double> dup_fraction;
    cmd->add_option("--config", config, "JSON dataset spec; flags override its fields");
    cmd->add_option("--n-base", n_base);
    cmd->add_option("--dup-factor", dup_factor);
    cmd->add_option("--dup-fraction", dup_fraction);
    cmd->add_option("--caption-style", style, "specific or general");
    cmd->add_option("--family", family, "finetune or fusion");
    cmd->add_option("--height", h);
    cmd->add_option("--width", w);
    cmd->add_option("--captions-output", captions_out, "Caption JSONL path (default: <output>.jsonl)");
    cmd->callback([&g] {
        if (to_stdout(g.output)) throw ContractError("synth: --output PATH is required for the image tensor");
        SynthSpec spec = config.empty() ? SynthSpec{} : synth_spec_from_json(read_json_file(config));
        if (n_base) spec.n_base = *n_base;
        if (dup_factor) spec.dup_factor = *dup_factor;
        if (dup_fraction) spec.dup_fraction = *dup_fraction;
        if (!style.empty()) spec.caption_style = parse_caption_style(style);
        if (!family.empty()) spec.family = parse_shape_family(family);
        if (h) spec.h = *h;
        if (w) spec.w = *w;
        if (g.seed) spec.seed = *g.seed;
        spec.validate();
        const auto data = gen_synth_dataset(spec);
        std::vector<ToyImage> images;
        std::string jsonl;
        char id[32];
        for (std::size_t i = 0; i < data.size(); ++i) {
            images.push_back(data[i].image);
            std::snprintf(id, sizeof id, "%05zu", i);
            jsonl += json{{"id", id}, {"caption", data[i].caption}, {"base_index", data[i].base_index}}.dump() + "\n";
        }
        const std::string cap_path = captions_out.empty() ? g.output + ".jsonl" : captions_out;
        save_tensor(images_to_tensor(images), g.output);
        emit_text(cap_path, jsonl);
        emit_json("-", {{"config", to_json(spec)}, {"images", g.output}, {"captions", cap_path}, {"n", data.size()}});
    });
}

void add_train(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("train", "Train the toy denoiser on an image tensor and captions");
    static std::string images, captions, fusion_images, fusion_captions, strategy = "none", loss_trace;
    static int steps = 20000, t_max = kDefaultTMax;
    static std::size_t batch = 32, pool = 2;
    static double lr = 1e-3;
    static DenoiserConfig net_cfg;
    cmd->add_option("--images", images)->required();
    cmd->add_option("--captions", captions)->required();
    cmd->add_option("--fusion-images", fusion_images);
    cmd->add_option("--fusion-captions", fusion_captions);
    cmd->add_option("--strategy", strategy, "Name or JSON object, e.g. '{\"name\":\"dual_fusion\",\"w_lat\":0.1}'");
    cmd->add_option("--steps", steps);
    cmd->add_option("--batch", batch);
    cmd->add_option("--lr", lr);
    cmd->add_option("--t-max", t_max);
    cmd->add_option("--hidden", net_cfg.hidden);
    cmd->add_option("--pool", pool);
    cmd->add_option("--loss-trace", loss_trace, "Write the per-step losses as JSON");
    cmd->callback([&g] {
        if (to_stdout(g.output)) throw ContractError("train: --output PATH is required for the model");
        const std::uint64_t seed = g.seed.value_or(0);
        const auto strat = parse_strategy_arg(strategy);
        const auto data = load_training_set(images, captions, pool);
        std::optional<TrainingSet> fusion;
        if (!fusion_images.empty() || !fusion_captions.empty())
            fusion = load_training_set(fusion_images, fusion_captions, pool);
        DenoiserConfig cfg = net_cfg;
        cfg.latent_dim = data.shape.dim();
        const auto schedule = make_schedule(t_max);
        auto net = DenoiserNet::initialized(cfg, derive_seed(seed, 4));
        TrainConfig tc;
        tc.steps = steps;
        tc.batch = batch;
        tc.adam.lr = lr;
        const auto losses = train(net, data, fusion ? &*fusion : nullptr, strat, schedule, tc, derive_seed(seed, 5));
        auto model = model_to_json(net, schedule, data.shape);
        model["training"] = {{"images", images},   {"captions", captions}, {"fusion_images", fusion_images},
                             {"fusion_captions", fusion_captions}, {"strategy", to_json(strat)}, {"steps", steps},
                             {"batch", batch},     {"lr", lr},             {"seed", seed}};
        emit_json(g.output, model);
        if (!loss_trace.empty()) emit_json(loss_trace, losses);
        const double tail = losses.empty() ? 0.0 : losses.back();
        emit_json("-", {{"config", model["training"]}, {"model", g.output}, {"last_loss", tail}});
    });
}

void add_sample(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("sample", "Sample images from a trained model");
    static std::string model_path, captions, caption;
    static std::size_t n = 1;
    cmd->add_option("--model", model_path)->required();
    cmd->add_option("--captions", captions, "JSONL; one image per record");
    cmd->add_option("--caption", caption, "Single caption repeated --n times");
    cmd->add_option("--n", n);
    cmd->callback([&g] {
        if (to_stdout(g.output)) throw ContractError("sample: --output PATH is required for the image tensor");
        if (captions.empty() == caption.empty()) throw ContractError("sample: give exactly one of --captions or --caption");
        const auto model = model_from_json(read_json_file(model_path));
        std::vector<std::string> prompts =
            captions.empty() ? std::vector<std::string>(n, caption) : captions_of(read_caption_jsonl_file(captions));
        const std::uint64_t base = g.seed.value_or(0);
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = 0; i < prompts.size(); ++i) seeds.push_back(derive_seed(base, i));
        save_tensor(images_to_tensor(sample_images(model.net, prompts, seeds, model.schedule, model.shape)), g.output);
        emit_json("-", {{"config", {{"model", model_path}, {"captions", captions}, {"caption", caption}, {"seed", base}}},
                        {"images", g.output},
                        {"n", prompts.size()}});
    });
}

void add_experiment(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("experiment", "Run a mitigation comparison from a JSON config");
    static std::string config, samples_dir;
    static std::optional<int> steps;
    static bool quiet = false;
    cmd->add_option("--config", config)->required();
    cmd->add_option("--samples-dir", samples_dir, "Write each run's samples as an RLTN tensor here");
    cmd->add_option("--steps", steps, "Override the config's training steps");
    cmd->add_flag("--quiet", quiet, "No progress on standard error");
    cmd->callback([&g] {
        auto j = read_json_file(config);
        if (g.seed) j["seeds"] = json::array({*g.seed});
        if (steps) j["steps"] = *steps;
        const auto cfg = experiment_config_from_json(j);
        ProgressFn progress;
        if (!quiet) progress = [](const std::string& m) { std::cerr << m << '\n'; };
        const auto report = run_experiment(cfg, progress);
        if (!samples_dir.empty()) {
            fs::create_directories(samples_dir);
            for (const auto& r : report.results)
                save_tensor(images_to_tensor(r.samples),
                            fs::path(samples_dir) / (file_label(r.strategy) + "_seed" + std::to_string(r.seed) + ".rltn"));
        }
        emit_json(g.output, to_json(report));
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Caption generality scoring and replication experiments on toy diffusion models"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Run seed")->configurable();
    app.add_option("--lexicon", g.lexicon, "Lexicon TSV");
    app.add_option("-o,--output", g.output, "Output path (default: standard output where text is allowed)");
    app.fallthrough();

    add_import_lexicon(app, g);
    add_score(app, g);
    add_generalize(app, g);
    add_features(app, g);
    add_repscore(app, g);
    add_fd(app, g);
    add_synth(app, g);
    add_train(app, g);
    add_sample(app, g);
    add_experiment(app, g);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
