#include "replimit/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "replimit/errors.hpp"

namespace replimit {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void validate_entry(const LexEntry& e) {
    if (e.lemma.empty()) throw ContractError("lexicon entry with empty lemma");
    if (is_space(e.lemma.front()) || is_space(e.lemma.back()))
        throw ContractError("lexicon lemma has surrounding whitespace: '" + e.lemma + "'");
    if (ascii_lower(e.lemma) != e.lemma) throw ContractError("lexicon lemma not lowercase: '" + e.lemma + "'");
    if (e.hyponym_count < 0) throw ContractError("negative hyponym count for '" + e.lemma + "'");
    if (!(e.depth >= 0.0)) throw ContractError("negative or NaN depth for '" + e.lemma + "'");
}

}  // namespace

Lexicon::Lexicon(std::vector<LexEntry> entries, LexiconGlobals globals, std::string source)
    : globals_(globals), source_(std::move(source)) {
    if (!(globals_.avg_global_hypo > 0.0) || !(globals_.da_global > 0.0))
        throw DegenerateLexiconError("lexicon globals must be strictly positive");
    for (auto& e : entries) {
        validate_entry(e);
        auto lemma = e.lemma;
        if (!entries_.emplace(std::move(lemma), std::move(e)).second)
            throw ContractError("duplicate lexicon lemma");
    }
}

std::optional<LexEntry> Lexicon::lookup(std::string_view lemma) const {
    if (lemma.empty()) return std::nullopt;
    auto it = entries_.find(ascii_lower(lemma));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

LexiconGlobals compute_globals(std::span<const LexEntry> entries, std::size_t top_k,
                               std::span<const std::int64_t> sense_tag_counts) {
    if (entries.empty()) throw ContractError("compute_globals: no entries");
    if (top_k == 0) throw ContractError("compute_globals: top_k must be >= 1");
    if (!sense_tag_counts.empty() && sense_tag_counts.size() != entries.size())
        throw ContractError("compute_globals: sense_tag_counts length mismatch");

    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    auto tag = [&](std::size_t i) { return sense_tag_counts.empty() ? 0 : sense_tag_counts[i]; };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (tag(a) != tag(b)) return tag(a) > tag(b);
        return entries[a].lemma < entries[b].lemma;
    });
    const std::size_t k = std::min(top_k, order.size());

    // Sums in sorted-lemma order of the selection so the result is permutation-invariant.
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end(),
              [&](std::size_t a, std::size_t b) { return entries[a].lemma < entries[b].lemma; });
    double hypo_sum = 0.0, depth_sum = 0.0;
    for (auto i : chosen) {
        hypo_sum += static_cast<double>(entries[i].hyponym_count);
        depth_sum += entries[i].depth;
    }
    LexiconGlobals g{hypo_sum / static_cast<double>(k), depth_sum / static_cast<double>(k)};
    if (!(g.avg_global_hypo > 0.0))
        throw DegenerateLexiconError("selected lexicon entries all have zero hyponyms");
    if (!(g.da_global > 0.0)) throw DegenerateLexiconError("selected lexicon entries all have zero depth");
    return g;
}

// ---------------------------------------------------------------------------
// WordNet import

namespace {

struct Synset {
    std::uint64_t offset = 0;
    std::int64_t direct_hyponyms = 0;
    std::vector<std::uint64_t> hypernyms;
};

class LineFields {
public:
    LineFields(std::string_view line, std::string file, std::size_t line_offset)
        : line_(line), file_(std::move(file)), base_(line_offset) {}

    std::string_view next() {
        while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
        if (pos_ >= line_.size()) fail("unexpected end of line");
        const auto start = pos_;
        while (pos_ < line_.size() && line_[pos_] != ' ') ++pos_;
        return line_.substr(start, pos_ - start);
    }

    std::uint64_t next_uint(int base = 10) {
        auto tok = next();
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, base);
        if (ec != std::errc() || p != tok.data() + tok.size()) fail("expected integer, got '" + std::string(tok) + "'");
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(file_ + ": byte offset " + std::to_string(base_ + pos_) + ": " + what);
    }

private:
    std::string_view line_;
    std::string file_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

template <class Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(line, start);
        start = end + 1;
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": byte offset 0: cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::unordered_map<std::uint64_t, Synset> parse_data_noun(const std::filesystem::path& path) {
    const auto text = read_text(path);
    const auto name = path.string();
    std::unordered_map<std::uint64_t, Synset> synsets;
    for_each_line(text, [&](std::string_view line, std::size_t at) {
        if (line.empty() || line.front() == ' ') return;  // license preamble
        LineFields f(line, name, at);
        Synset s;
        s.offset = f.next_uint();
        if (s.offset != at) f.fail("synset offset " + std::to_string(s.offset) + " does not match its position");
        f.next();  // lex_filenum
        auto ss_type = f.next();
        if (ss_type != "n") f.fail("expected noun synset type 'n', got '" + std::string(ss_type) + "'");
        const auto w_cnt = f.next_uint(16);
        for (std::uint64_t i = 0; i < w_cnt; ++i) {
            f.next();  // word
            f.next();  // lex_id
        }
        const auto p_cnt = f.next_uint();
        for (std::uint64_t i = 0; i < p_cnt; ++i) {
            auto symbol = f.next();
            const auto target = f.next_uint();
            auto pos = f.next();
            f.next();  // source/target
            if (pos != "n") continue;
            if (symbol == "~") ++s.direct_hyponyms;
            else if (symbol == "@" || symbol == "@i") s.hypernyms.push_back(target);
        }
        synsets.emplace(s.offset, std::move(s));
    });
    if (synsets.empty()) throw ParseError(name + ": byte offset 0: no synsets found");
    return synsets;
}

// Shortest path length from every synset to the hierarchy root. With several
// roots, a virtual root sits at depth 0 and the real roots at depth 1.
std::unordered_map<std::uint64_t, std::int64_t> synset_depths(
    const std::unordered_map<std::uint64_t, Synset>& synsets, const std::string& file) {
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> children;
    std::vector<std::uint64_t> roots;
    for (const auto& [off, s] : synsets) {
        bool has_parent = false;
        for (auto p : s.hypernyms) {
            if (!synsets.contains(p))
                throw ParseError(file + ": byte offset " + std::to_string(off) + ": hypernym pointer to unknown synset " +
                                 std::to_string(p));
            children[p].push_back(off);
            has_parent = true;
        }
        if (!has_parent) roots.push_back(off);
    }
    std::sort(roots.begin(), roots.end());
    if (roots.empty()) throw ParseError(file + ": byte offset 0: hypernym hierarchy has no root");
    const std::int64_t root_depth = roots.size() > 1 ? 1 : 0;

    std::unordered_map<std::uint64_t, std::int64_t> depth;
    std::deque<std::uint64_t> queue;
    for (auto r : roots) {
        depth[r] = root_depth;
        queue.push_back(r);
    }
    while (!queue.empty()) {
        auto cur = queue.front();
        queue.pop_front();
        auto it = children.find(cur);
        if (it == children.end()) continue;
        for (auto c : it->second) {
            if (depth.contains(c)) continue;
            depth[c] = depth[cur] + 1;
            queue.push_back(c);
        }
    }
    for (const auto& [off, s] : synsets)
        if (!depth.contains(off))
            throw ParseError(file + ": byte offset " + std::to_string(off) + ": synset unreachable from any root (cycle)");
    return depth;
}

}  // namespace

Lexicon import_wordnet(const std::filesystem::path& db_dir, std::size_t top_k) {
    const auto data_path = db_dir / "data.noun";
    const auto index_path = db_dir / "index.noun";
    if (!std::filesystem::is_directory(db_dir))
        throw ParseError(db_dir.string() + ": byte offset 0: not a directory");
    const auto synsets = parse_data_noun(data_path);
    const auto depths = synset_depths(synsets, data_path.string());

    const auto index_text = read_text(index_path);
    const auto index_name = index_path.string();
    std::vector<LexEntry> entries;
    std::vector<std::int64_t> tag_counts;
    for_each_line(index_text, [&](std::string_view line, std::size_t at) {
        if (line.empty() || line.front() == ' ') return;
        LineFields f(line, index_name, at);
        auto lemma = ascii_lower(f.next());
        auto pos = f.next();
        if (pos != "n") f.fail("expected pos 'n', got '" + std::string(pos) + "'");
        const auto synset_cnt = f.next_uint();
        const auto p_cnt = f.next_uint();
        for (std::uint64_t i = 0; i < p_cnt; ++i) f.next();
        f.next_uint();  // sense_cnt
        const auto tagsense_cnt = f.next_uint();
        if (synset_cnt == 0) f.fail("lemma '" + lemma + "' lists no synsets");
        std::int64_t hypo_sum = 0;
        std::int64_t depth_sum = 0;
        for (std::uint64_t i = 0; i < synset_cnt; ++i) {
            const auto off = f.next_uint();
            auto it = synsets.find(off);
            if (it == synsets.end()) f.fail("synset offset " + std::to_string(off) + " not found in data.noun");
            hypo_sum += it->second.direct_hyponyms;
            depth_sum += depths.at(off);
        }
        const auto n = static_cast<std::int64_t>(synset_cnt);
        LexEntry e;
        e.lemma = std::move(lemma);
        e.hyponym_count = (2 * hypo_sum + n) / (2 * n);  // mean rounded half-up
        e.depth = static_cast<double>(depth_sum) / static_cast<double>(n);
        entries.push_back(std::move(e));
        tag_counts.push_back(static_cast<std::int64_t>(tagsense_cnt));
    });
    if (entries.empty()) throw ParseError(index_name + ": byte offset 0: no index entries");
    const auto globals = compute_globals(entries, top_k, tag_counts);
    return Lexicon(std::move(entries), globals, "wordnet:" + db_dir.string());
}

// ---------------------------------------------------------------------------
// TSV

std::string format_lexicon_tsv(const Lexicon& lexicon) {
    std::string out = "lemma\thypo\tdepth\n";
    for (const auto& [lemma, e] : lexicon.entries()) {
        out += lemma;
        out += '\t';
        out += std::to_string(e.hyponym_count);
        out += '\t';
        out += format_g9(e.depth);
        out += '\n';
    }
    out += "#avg_global_hypo=" + format_g9(lexicon.avg_global_hypo()) + "\n";
    out += "#da_global=" + format_g9(lexicon.da_global()) + "\n";
    return out;
}

namespace {

double parse_double_field(std::string_view tok, const std::string& where) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw ParseError(where + ": bad number '" + std::string(tok) + "'");
    return v;
}

}  // namespace

Lexicon parse_lexicon_tsv(std::string_view text, const std::string& origin) {
    std::vector<LexEntry> entries;
    std::optional<double> avg_hypo, da_global;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool saw_header = false;
    std::map<std::string, std::size_t, std::less<>> seen;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "lemma\thypo\tdepth") throw ParseError(where + ": expected header 'lemma\\thypo\\tdepth'");
            saw_header = true;
            continue;
        }
        if (line.front() == '#') {
            auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ParseError(where + ": malformed comment line");
            auto key = line.substr(1, eq - 1);
            auto val = parse_double_field(line.substr(eq + 1), where);
            if (key == "avg_global_hypo") avg_hypo = val;
            else if (key == "da_global") da_global = val;
            else throw ParseError(where + ": unknown global '" + std::string(key) + "'");
            continue;
        }
        std::vector<std::string_view> cols;
        std::size_t c0 = 0;
        while (true) {
            auto tab = line.find('\t', c0);
            cols.push_back(line.substr(c0, tab == std::string_view::npos ? std::string_view::npos : tab - c0));
            if (tab == std::string_view::npos) break;
            c0 = tab + 1;
        }
        if (cols.size() != 3)
            throw ParseError(where + ": expected 3 columns, got " + std::to_string(cols.size()));
        LexEntry e;
        e.lemma = std::string(cols[0]);
        std::int64_t hypo = 0;
        auto [p, ec] = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), hypo);
        if (ec != std::errc() || p != cols[1].data() + cols[1].size())
            throw ParseError(where + ": bad hyponym count '" + std::string(cols[1]) + "'");
        e.hyponym_count = hypo;
        e.depth = parse_double_field(cols[2], where);
        try {
            validate_entry(e);
        } catch (const ContractError& err) {
            throw ParseError(where + ": " + err.what());
        }
        if (auto [it, inserted] = seen.emplace(e.lemma, line_no); !inserted)
            throw ParseError(where + ": duplicate lemma '" + e.lemma + "' (first on line " + std::to_string(it->second) + ")");
        entries.push_back(std::move(e));
    }
    if (!saw_header) throw ParseError(origin + ": empty lexicon file");
    if (entries.empty()) throw ParseError(origin + ": lexicon has no entries");
    if (!avg_hypo || !da_global) throw ParseError(origin + ": missing #avg_global_hypo or #da_global line");
    try {
        return Lexicon(std::move(entries), {*avg_hypo, *da_global}, origin);
    } catch (const DegenerateLexiconError& err) {
        throw ParseError(origin + ": " + err.what());
    }
}

void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path.string() + ": cannot open for writing");
    out << format_lexicon_tsv(lexicon);
    if (!out) throw ParseError(path.string() + ": write failed");
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open lexicon");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_lexicon_tsv(ss.str(), path.string());
}

}  // namespace replimit
