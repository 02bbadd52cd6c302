#include "replimit/genmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "replimit/errors.hpp"

namespace replimit {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace

double si_score(const AnnotatedCaption& ann) {
    if (ann.n_word < 1) throw EmptyCaptionError();
    return clamp01(1.0 - static_cast<double>(ann.ent + ann.num) / ann.n_word);
}

double bt_score(const AnnotatedCaption& ann, const Lexicon& lexicon) {
    if (ann.n_word < 1) throw EmptyCaptionError();
    double hypo_sum = 0.0;
    for (const auto& noun : ann.nouns)
        if (auto e = lexicon.lookup(noun)) hypo_sum += static_cast<double>(e->hyponym_count);
    return clamp01(hypo_sum / (ann.n_word * 2.0 * lexicon.avg_global_hypo()));
}

double tm_score(const AnnotatedCaption& ann) {
    if (ann.v_total == 0) return 0.5;
    return clamp01(static_cast<double>(ann.count_pres_ind) / ann.v_total);
}

double da_score(const AnnotatedCaption& ann, const Lexicon& lexicon) {
    double depth_sum = 0.0;
    int resolved = 0;
    for (const auto& noun : ann.nouns) {
        if (auto e = lexicon.lookup(noun)) {
            depth_sum += e->depth;
            ++resolved;
        }
    }
    const double da_caption = resolved == 0 ? 0.0 : depth_sum / resolved;
    return clamp01(da_caption / (2.0 * lexicon.da_global()));
}

double aggregate(double si10, double bt10, double tm10, double da10) {
    for (double v : {si10, bt10, tm10, da10})
        if (!(v >= 0.0 && v <= 10.0)) throw ContractError("aggregate: scaled metric outside [0,10]");
    return (si10 + bt10 + tm10 + da10) / 4.0;
}

GeneralityReport make_report(double si, double bt, double tm, double da) {
    GeneralityReport r{si, bt, tm, da, 10.0 * si, 10.0 * bt, 10.0 * tm, 10.0 * da, 0.0};
    r.gs = aggregate(r.si10, r.bt10, r.tm10, r.da10);
    return r;
}

GeneralityReport score_annotated(const AnnotatedCaption& ann, const Lexicon& lexicon) {
    return make_report(si_score(ann), bt_score(ann, lexicon), tm_score(ann), da_score(ann, lexicon));
}

GeneralityReport score_caption(std::string_view text, const Lexicon& lexicon) {
    return score_annotated(annotate(text, lexicon), lexicon);
}

double round2(double v) { return std::floor(v * 100.0 + 0.5) / 100.0; }

std::vector<CaptionRecord> read_caption_jsonl(std::istream& in, const std::string& origin) {
    std::vector<CaptionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(where + ": invalid JSON: " + e.what());
        }
        if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
        if (!j.contains("id") || !j["id"].is_string()) throw ParseError(where + ": missing string field 'id'");
        if (!j.contains("caption") || !j["caption"].is_string())
            throw ParseError(where + ": missing string field 'caption'");
        CaptionRecord r{j["id"].get<std::string>(), j["caption"].get<std::string>(), {}};
        if (j.contains("image")) {
            if (!j["image"].is_string()) throw ParseError(where + ": field 'image' must be a string");
            r.image = j["image"].get<std::string>();
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<CaptionRecord> read_caption_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    return read_caption_jsonl(in, path);
}

CorpusReport score_corpus(const std::vector<CaptionRecord>& records, const Lexicon& lexicon) {
    if (records.empty()) throw ContractError("score_corpus: empty corpus");
    CorpusReport out;
    CompensatedSum si, bt, tm, da;
    for (const auto& rec : records) {
        const auto ann = annotate(rec.caption, lexicon);
        if (ann.n_word == 0) {
            out.skipped_ids.push_back(rec.id);
            continue;
        }
        auto r = score_annotated(ann, lexicon);
        si.add(r.si);
        bt.add(r.bt);
        tm.add(r.tm);
        da.add(r.da);
        out.items.push_back({rec.id, r});
    }
    if (out.items.empty()) throw ContractError("score_corpus: no caption could be scored");
    const double n = static_cast<double>(out.items.size());
    out.mean = make_report(si.value() / n, bt.value() / n, tm.value() / n, da.value() / n);
    return out;
}

nlohmann::json to_json(const GeneralityReport& r) {
    return {
        {"si", r.si},
        {"bt", r.bt},
        {"tm", r.tm},
        {"da", r.da},
        {"si10", round2(r.si10)},
        {"bt10", round2(r.bt10)},
        {"tm10", round2(r.tm10)},
        {"da10", round2(r.da10)},
        {"gs", round2(r.gs)},
    };
}

nlohmann::json to_json(const CorpusReport& r, bool per_caption) {
    nlohmann::json out;
    auto summary = to_json(r.mean);
    summary["count"] = r.items.size();
    summary["skipped"] = r.skipped_ids.size();
    out["summary"] = summary;
    out["skipped_ids"] = r.skipped_ids;
    if (per_caption) {
        auto items = nlohmann::json::array();
        for (const auto& item : r.items) {
            auto j = to_json(item.report);
            j["id"] = item.id;
            items.push_back(std::move(j));
        }
        out["captions"] = std::move(items);
    }
    return out;
}

}  // namespace replimit
