#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace replimit {

// One noun lemma with its hierarchy statistics.
//   hyponym_count: mean number of direct hyponym pointers over the lemma's noun
//                  synsets, rounded half-up.
//   depth:         mean shortest hypernym-path length from each noun synset to the root.
struct LexEntry {
    std::string lemma;
    std::int64_t hyponym_count = 0;
    double depth = 0.0;

    bool operator==(const LexEntry&) const = default;
};

struct LexiconGlobals {
    double avg_global_hypo = 0.0;
    double da_global = 0.0;
};

inline constexpr std::size_t kDefaultGlobalsTopK = 30000;

// Immutable lemma table plus the corpus-wide normalizers used by the
// breadth and abstraction metrics.
class Lexicon {
public:
    Lexicon(std::vector<LexEntry> entries, LexiconGlobals globals, std::string source);

    // Case-insensitive exact match. Empty or unknown lemmas yield nullopt.
    std::optional<LexEntry> lookup(std::string_view lemma) const;
    bool contains(std::string_view lemma) const { return lookup(lemma).has_value(); }

    const std::map<std::string, LexEntry, std::less<>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    double avg_global_hypo() const { return globals_.avg_global_hypo; }
    double da_global() const { return globals_.da_global; }
    const LexiconGlobals& globals() const { return globals_; }
    const std::string& source() const { return source_; }

private:
    std::map<std::string, LexEntry, std::less<>> entries_;
    LexiconGlobals globals_;
    std::string source_;
};

// Means of hyponym_count and depth over the top_k entries ranked by
// sense_tag_counts (descending, ties lexicographic by lemma). When
// sense_tag_counts is empty every entry ranks equally. Throws
// DegenerateLexiconError if either mean is not strictly positive.
LexiconGlobals compute_globals(std::span<const LexEntry> entries, std::size_t top_k = kDefaultGlobalsTopK,
                               std::span<const std::int64_t> sense_tag_counts = {});

// Reads data.noun and index.noun from a WordNet 3.x database directory.
Lexicon import_wordnet(const std::filesystem::path& db_dir, std::size_t top_k = kDefaultGlobalsTopK);

// Compact TSV form: "lemma\thypo\tdepth" header, one row per entry (depth at 9
// significant digits), then "#avg_global_hypo=<v>" and "#da_global=<v>".
std::string format_lexicon_tsv(const Lexicon& lexicon);
Lexicon parse_lexicon_tsv(std::string_view text, const std::string& origin = "<memory>");
void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);
Lexicon load_lexicon(const std::filesystem::path& path);

std::string ascii_lower(std::string_view s);

}  // namespace replimit
