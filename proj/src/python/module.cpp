#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "replimit/errors.hpp"
#include "replimit/experiment.hpp"
#include "replimit/generalize.hpp"
#include "replimit/genmetrics.hpp"
#include "replimit/image.hpp"
#include "replimit/lexicon.hpp"
#include "replimit/replication.hpp"
#include "replimit/synth.hpp"
#include "replimit/tensor_io.hpp"

namespace py = pybind11;
using namespace replimit;

namespace {

// JSON crosses the boundary as text; the Python package wraps these with json.loads/dumps.
using Array2 = py::array_t<float, py::array::c_style | py::array::forcecast>;

// Rows are normalized unless `exact`, which instead requires unit rows and keeps the bits.
FeatureMatrix matrix_from(const Array2& a, bool exact = false) {
    if (a.ndim() != 2) throw ContractError("feature array must be 2-D (n x d)");
    const auto n = static_cast<std::size_t>(a.shape(0)), d = static_cast<std::size_t>(a.shape(1));
    std::vector<float> values(a.data(), a.data() + n * d);
    return exact ? FeatureMatrix(n, d, std::move(values)) : FeatureMatrix::normalized(n, d, std::move(values));
}

py::array_t<float> array_from(const FeatureMatrix& m) {
    py::array_t<float> out({m.n(), m.d()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

py::array_t<float> images_array(const std::vector<ToyImage>& images) {
    const auto t = images_to_tensor(images);
    py::array_t<float> out(std::vector<py::ssize_t>(t.dims.begin(), t.dims.end()));
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

std::vector<ToyImage> images_from(const Array2& a) {
    Tensor t;
    for (py::ssize_t i = 0; i < a.ndim(); ++i) t.dims.push_back(static_cast<std::uint32_t>(a.shape(i)));
    t.data.assign(a.data(), a.data() + a.size());
    return tensor_to_images(t);
}

nlohmann::json parse_json(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

py::dict report_dict(const GeneralityReport& r) {
    py::dict d;
    d["si"] = r.si, d["bt"] = r.bt, d["tm"] = r.tm, d["da"] = r.da;
    d["si10"] = r.si10, d["bt10"] = r.bt10, d["tm10"] = r.tm10, d["da10"] = r.da10;
    d["gs"] = r.gs;
    return d;
}

}  // namespace

PYBIND11_MODULE(_replimit, m) {
    m.doc() = "Native core: caption generality metrics, replication scoring and toy diffusion experiments.";

    auto base = py::register_exception<Error>(m, "ReplimitError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<NetworkError>(m, "NetworkError", base.ptr());
    py::register_exception<ProviderError>(m, "ProviderError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);

    py::class_<Lexicon>(m, "Lexicon")
        .def(py::init([](const std::vector<std::tuple<std::string, std::int64_t, double>>& rows, double avg_hypo,
                         double da_global) {
                 std::vector<LexEntry> entries;
                 for (const auto& [lemma, hypo, depth] : rows) entries.push_back({lemma, hypo, depth});
                 return Lexicon(entries, {avg_hypo, da_global}, "python");
             }),
             py::arg("entries"), py::arg("avg_global_hypo"), py::arg("da_global"))
        .def_static("load", &load_lexicon, py::arg("path"))
        .def_static("parse", [](const std::string& text) { return parse_lexicon_tsv(text, "<python>"); })
        .def_static("from_wordnet", &import_wordnet, py::arg("db_dir"), py::arg("top_k") = kDefaultGlobalsTopK)
        .def("to_tsv", &format_lexicon_tsv)
        .def("save", [](const Lexicon& l, const std::string& path) { save_lexicon(l, path); })
        .def("lookup",
             [](const Lexicon& l, const std::string& lemma) -> py::object {
                 const auto e = l.lookup(lemma);
                 if (!e) return py::none();
                 return py::make_tuple(e->hyponym_count, e->depth);
             })
        .def("__len__", &Lexicon::size)
        .def_property_readonly("avg_global_hypo", &Lexicon::avg_global_hypo)
        .def_property_readonly("da_global", &Lexicon::da_global);

    m.def("score_caption", [](const std::string& text, const Lexicon& lex) { return report_dict(score_caption(text, lex)); },
          py::arg("caption"), py::arg("lexicon"));
    m.def("aggregate", &aggregate, py::arg("si10"), py::arg("bt10"), py::arg("tm10"), py::arg("da10"));
    m.def("tokenize", &tokenize);
    m.def(
        "mock_generalize",
        [](const std::string& caption, const std::string& level, const Lexicon& lex) {
            return mock_generalize(caption, parse_generality_level(level), lex);
        },
        py::arg("caption"), py::arg("level"), py::arg("lexicon"));
    m.def(
        "build_prompt",
        [](const std::string& caption, const std::string& level) {
            return build_prompt(caption, parse_generality_level(level));
        },
        py::arg("caption"), py::arg("level"));

    m.def("toy_features", [](const Array2& images) { return array_from(toy_feature_matrix(images_from(images))); },
          py::arg("images"), "Unit-norm descriptors for an N x H x W image stack.");
    m.def(
        "similarities",
        [](const Array2& train, const Array2& gen) {
            return similarity_scores(matrix_from(train), matrix_from(gen)).s_values;
        },
        py::arg("train"), py::arg("gen"));
    m.def(
        "replication_score",
        [](const Array2& train, const Array2& gen, double q) {
            const auto r = replication_score(similarity_scores(matrix_from(train), matrix_from(gen)), q);
            return py::make_tuple(r.r, r.n_gen);
        },
        py::arg("train"), py::arg("gen"), py::arg("quantile") = 0.95, "(R, n_gen) for row-normalized features.");
    m.def(
        "quantile_score",
        [](std::vector<double> s, double q) { return replication_score(SimilarityDistribution{std::move(s)}, q).r; },
        py::arg("similarities"), py::arg("quantile") = 0.95);
    m.def(
        "frechet_distance",
        [](const Array2& a, const Array2& b) {
            return frechet_distance(fit_gaussian(matrix_from(a)), fit_gaussian(matrix_from(b)));
        },
        py::arg("a"), py::arg("b"));

    m.def("load_tensor", [](const std::string& path) {
        const auto t = load_tensor(path);
        py::array_t<float> out(std::vector<py::ssize_t>(t.dims.begin(), t.dims.end()));
        std::copy(t.data.begin(), t.data.end(), out.mutable_data());
        return out;
    });
    m.def("save_tensor", [](const Array2& a, const std::string& path) {
        Tensor t;
        for (py::ssize_t i = 0; i < a.ndim(); ++i) t.dims.push_back(static_cast<std::uint32_t>(a.shape(i)));
        t.data.assign(a.data(), a.data() + a.size());
        save_tensor(t, path);
    });
    m.def("load_features", [](const std::string& path) { return array_from(load_features(path)); });
    m.def("save_features", [](const Array2& a, const std::string& path) { save_features(matrix_from(a, true), path); });

    m.def(
        "synth_dataset_json",
        [](const std::string& spec_json) {
            const auto data = gen_synth_dataset(synth_spec_from_json(parse_json(spec_json, "dataset spec")));
            std::vector<ToyImage> images;
            std::vector<std::string> captions;
            for (const auto& x : data) images.push_back(x.image), captions.push_back(x.caption);
            return py::make_tuple(images_array(images), captions);
        },
        py::arg("spec_json"));
    m.def(
        "run_experiment_json",
        [](const std::string& config_json) {
            const auto cfg = experiment_config_from_json(parse_json(config_json, "experiment config"));
            ExperimentReport report;
            {
                py::gil_scoped_release release;
                report = run_experiment(cfg);
            }
            return to_json(report).dump();
        },
        py::arg("config_json"), "Runs every strategy and seed; returns the JSON report text.");
}
