#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

#include "replimit/lexicon.hpp"

namespace testsupport {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("replimit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline replimit::Lexicon make_lexicon(const std::vector<replimit::LexEntry>& entries, double avg_hypo, double da) {
    return replimit::Lexicon(entries, {avg_hypo, da}, "test");
}

// Writes a WordNet-format noun database. Each synset lists its words and the
// indices of its hypernyms; hyponym pointers are derived from those edges and
// byte offsets are computed so every line starts at its declared offset.
struct StubSynset {
    std::vector<std::string> words;
    std::vector<std::size_t> parents;
    std::size_t tag_count = 0;
};

inline void write_wordnet_stub(const std::filesystem::path& dir, const std::vector<StubSynset>& synsets) {
    const std::string preamble = "  1 stub noun database\n  2 generated for tests\n";
    auto line_for = [&](std::size_t i, const std::vector<std::size_t>& offsets) {
        const auto& s = synsets[i];
        std::vector<std::pair<std::string, std::size_t>> ptrs;
        for (auto p : s.parents) ptrs.emplace_back("@", p);
        for (std::size_t j = 0; j < synsets.size(); ++j)
            for (auto p : synsets[j].parents)
                if (p == i) ptrs.emplace_back("~", j);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%08zu 05 n %02zx", offsets[i], s.words.size());
        std::string line = buf;
        for (const auto& w : s.words) line += " " + w + " 0";
        std::snprintf(buf, sizeof buf, " %03zu", ptrs.size());
        line += buf;
        for (const auto& [sym, target] : ptrs) {
            std::snprintf(buf, sizeof buf, " %s %08zu n 0000", sym.c_str(), offsets[target]);
            line += buf;
        }
        return line + " | stub gloss\n";
    };
    std::vector<std::size_t> offsets(synsets.size(), 0);
    std::size_t pos = preamble.size();
    for (std::size_t i = 0; i < synsets.size(); ++i) {
        offsets[i] = pos;
        pos += line_for(i, std::vector<std::size_t>(synsets.size(), 0)).size();
    }
    std::string data = preamble;
    for (std::size_t i = 0; i < synsets.size(); ++i) data += line_for(i, offsets);
    write_file(dir / "data.noun", data);

    std::map<std::string, std::vector<std::size_t>> senses;
    std::map<std::string, std::size_t> tags;
    for (std::size_t i = 0; i < synsets.size(); ++i)
        for (const auto& w : synsets[i].words) {
            senses[w].push_back(offsets[i]);
            tags[w] += synsets[i].tag_count;
        }
    std::string index = preamble;
    for (const auto& [lemma, offs] : senses) {
        index += lemma + " n " + std::to_string(offs.size()) + " 1 @ " + std::to_string(offs.size()) + " " +
                 std::to_string(tags[lemma]);
        for (auto o : offs) {
            char buf[16];
            std::snprintf(buf, sizeof buf, " %08zu", o);
            index += buf;
        }
        index += "\n";
    }
    write_file(dir / "index.noun", index);
}

}  // namespace testsupport
