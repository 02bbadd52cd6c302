#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "replimit/annotate.hpp"
#include "replimit/lexicon.hpp"

namespace replimit {

// Raw metrics live in [0,1]; the *10 fields are the same values scaled to
// [0,10]; gs is the mean of the four scaled values.
struct GeneralityReport {
    double si = 0, bt = 0, tm = 0, da = 0;
    double si10 = 0, bt10 = 0, tm10 = 0, da10 = 0;
    double gs = 0;
};

double si_score(const AnnotatedCaption& ann);
double bt_score(const AnnotatedCaption& ann, const Lexicon& lexicon);
double tm_score(const AnnotatedCaption& ann);
double da_score(const AnnotatedCaption& ann, const Lexicon& lexicon);

// Mean of the four [0,10]-scaled metrics. Throws ContractError on out-of-range input.
double aggregate(double si10, double bt10, double tm10, double da10);

GeneralityReport make_report(double si, double bt, double tm, double da);
GeneralityReport score_annotated(const AnnotatedCaption& ann, const Lexicon& lexicon);
GeneralityReport score_caption(std::string_view text, const Lexicon& lexicon);

// Half-up rounding to two decimals, the precision reports are printed at.
double round2(double v);

struct CaptionRecord {
    std::string id;
    std::string caption;
    std::string image;  // optional, empty when absent
};

// Parses caption JSONL (one {"id", "caption", "image"?} object per line).
// Blank lines are skipped; malformed lines raise ParseError with the line number.
std::vector<CaptionRecord> read_caption_jsonl(std::istream& in, const std::string& origin = "<stream>");
std::vector<CaptionRecord> read_caption_jsonl_file(const std::string& path);

struct CorpusReport {
    struct Item {
        std::string id;
        GeneralityReport report;
    };
    std::vector<Item> items;
    std::vector<std::string> skipped_ids;  // records whose caption had no words
    GeneralityReport mean;                 // mean of every field over scored items
};

CorpusReport score_corpus(const std::vector<CaptionRecord>& records, const Lexicon& lexicon);

nlohmann::json to_json(const GeneralityReport& r);
nlohmann::json to_json(const CorpusReport& r, bool per_caption);

}  // namespace replimit
