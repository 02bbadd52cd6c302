#include "replimit/annotate.hpp"

#include <algorithm>
#include <array>
#include <optional>

#include "replimit/resources.hpp"

namespace replimit {

std::string_view to_string(Pos pos) {
    switch (pos) {
        case Pos::Noun: return "NOUN";
        case Pos::Propn: return "PROPN";
        case Pos::Verb: return "VERB";
        case Pos::Num: return "NUM";
        case Pos::Other: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(VerbForm form) {
    switch (form) {
        case VerbForm::None: return "NONE";
        case VerbForm::PresInd: return "PRES_IND";
        case VerbForm::OtherVerb: return "OTHER_VERB";
    }
    return "NONE";
}

const WordLists& bundled_word_lists() {
    static const WordLists lists = [] {
        WordLists w;
        for (auto& s : bundled_lines("number_words.txt")) w.number_words.insert(s);
        for (auto& s : bundled_lines("gazetteer.txt")) w.gazetteer.insert(s);
        for (auto& s : bundled_lines("function_words.txt")) w.function_words.insert(s);
        w.verb_list = bundled_lines("verbs.txt");
        for (auto& s : w.verb_list) w.verbs.insert(s);
        w.nouns = bundled_lines("nouns.txt");
        for (auto& line : bundled_lines("irregular_verbs.txt")) {
            std::array<std::string, 3> parts;
            std::size_t k = 0, start = 0;
            while (k < 3 && start <= line.size()) {
                auto sp = line.find(' ', start);
                parts[k++] = line.substr(start, sp == std::string::npos ? std::string::npos : sp - start);
                if (sp == std::string::npos) break;
                start = sp + 1;
            }
            w.irregular_past.try_emplace(parts[1], WordLists::Irregular{parts[0], false});
            w.irregular_past.try_emplace(parts[2], WordLists::Irregular{parts[0], true});
        }
        return w;
    }();
    return lists;
}

namespace {

bool is_ascii_punct(char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}
bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_upper(c) || is_lower(c) || is_digit(c); }

std::string_view strip_punct(std::string_view s) {
    while (!s.empty() && is_ascii_punct(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ascii_punct(s.back())) s.remove_suffix(1);
    return s;
}

bool ends_sentence(std::string_view chunk) {
    while (!chunk.empty() && (chunk.back() == '"' || chunk.back() == '\'' || chunk.back() == ')' || chunk.back() == ']'))
        chunk.remove_suffix(1);
    return !chunk.empty() && (chunk.back() == '.' || chunk.back() == '!' || chunk.back() == '?');
}

struct RawToken {
    std::string text;
    bool sentence_initial = false;
};

std::vector<RawToken> split_tokens(std::string_view text) {
    std::vector<RawToken> out;
    bool next_initial = true;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        const auto start = i;
        while (i < text.size() && !is_ascii_space(text[i])) ++i;
        if (start == i) break;
        const auto chunk = text.substr(start, i - start);
        const auto core = strip_punct(chunk);
        bool first_fragment = true;
        std::size_t f0 = 0;
        while (f0 <= core.size()) {
            auto f1 = core.find_first_of("-/", f0);
            if (f1 == std::string_view::npos) f1 = core.size();
            auto frag = strip_punct(core.substr(f0, f1 - f0));
            if (!frag.empty()) {
                out.push_back({std::string(frag), first_fragment && next_initial});
                first_fragment = false;
            }
            f0 = f1 + 1;
        }
        // A chunk made only of punctuation ("--", "...") still closes a sentence.
        if (!core.empty() || ends_sentence(chunk)) next_initial = ends_sentence(chunk);
    }
    return out;
}

bool is_numeric_text(std::string_view s) {
    if (s.empty() || !is_digit(s.front())) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return is_digit(c) || c == '.' || c == ',' || c == '%'; });
}

bool is_capitalized(std::string_view s) { return !s.empty() && is_upper(s.front()); }

bool is_all_caps(std::string_view s) {
    int letters = 0;
    for (char c : s) {
        if (is_lower(c)) return false;
        if (is_upper(c)) ++letters;
    }
    return letters >= 2;
}

constexpr std::array<std::string_view, 16> kDeterminers = {
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our", "their", "every", "each"};

bool is_determiner(std::string_view lower) {
    return std::find(kDeterminers.begin(), kDeterminers.end(), lower) != kDeterminers.end();
}

struct VerbAnalysis {
    std::string lemma;
    enum Kind { Base, ThirdPerson, Past, Participle, Gerund, PresentAux, NonPresentModal } kind;
};

std::optional<VerbAnalysis> auxiliary(std::string_view w) {
    using K = VerbAnalysis::Kind;
    struct Aux {
        std::string_view form, lemma;
        K kind;
    };
    static constexpr Aux table[] = {
        {"am", "be", K::PresentAux},     {"is", "be", K::PresentAux},       {"are", "be", K::PresentAux},
        {"be", "be", K::Base},           {"was", "be", K::Past},            {"were", "be", K::Past},
        {"been", "be", K::Participle},   {"being", "be", K::Gerund},        {"have", "have", K::Base},
        {"has", "have", K::ThirdPerson}, {"had", "have", K::Past},          {"having", "have", K::Gerund},
        {"do", "do", K::Base},           {"does", "do", K::ThirdPerson},    {"did", "do", K::Past},
        {"done", "do", K::Participle},   {"doing", "do", K::Gerund},        {"can", "can", K::PresentAux},
        {"will", "will", K::PresentAux}, {"may", "may", K::PresentAux},     {"must", "must", K::PresentAux},
        {"shall", "shall", K::PresentAux}, {"could", "could", K::NonPresentModal},
        {"would", "would", K::NonPresentModal}, {"should", "should", K::NonPresentModal},
        {"might", "might", K::NonPresentModal},
    };
    for (const auto& a : table)
        if (a.form == w) return VerbAnalysis{std::string(a.lemma), a.kind};
    return std::nullopt;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Candidate lemmas for an inflected stem: the stem, stem+"e", and the stem with
// a doubled final consonant undone.
std::optional<std::string> match_stem(std::string_view stem, const std::unordered_set<std::string>& verbs) {
    if (stem.empty()) return std::nullopt;
    std::string s(stem);
    if (verbs.contains(s)) return s;
    if (verbs.contains(s + "e")) return s + "e";
    if (s.size() >= 2 && s[s.size() - 1] == s[s.size() - 2] && std::string_view("aeiou").find(s.back()) == std::string_view::npos) {
        auto undoubled = s.substr(0, s.size() - 1);
        if (verbs.contains(undoubled)) return undoubled;
    }
    return std::nullopt;
}

std::optional<VerbAnalysis> lexical_verb(const std::string& w, const WordLists& lists) {
    using K = VerbAnalysis::Kind;
    const auto& verbs = lists.verbs;
    if (verbs.contains(w)) return VerbAnalysis{w, K::Base};
    if (auto it = lists.irregular_past.find(w); it != lists.irregular_past.end())
        return VerbAnalysis{it->second.base, it->second.participle ? K::Participle : K::Past};
    if (ends_with(w, "ing")) {
        auto stem = std::string_view(w).substr(0, w.size() - 3);
        if (ends_with(w, "ying") && verbs.contains(std::string(stem.substr(0, stem.size() - 1)) + "ie"))
            return VerbAnalysis{std::string(stem.substr(0, stem.size() - 1)) + "ie", K::Gerund};
        if (auto lemma = match_stem(stem, verbs)) return VerbAnalysis{*lemma, K::Gerund};
    }
    if (ends_with(w, "ied")) {
        auto lemma = w.substr(0, w.size() - 3) + "y";
        if (verbs.contains(lemma)) return VerbAnalysis{lemma, K::Past};
    }
    if (ends_with(w, "ed")) {
        if (auto lemma = match_stem(std::string_view(w).substr(0, w.size() - 2), verbs)) return VerbAnalysis{*lemma, K::Past};
    }
    if (ends_with(w, "ies")) {
        auto lemma = w.substr(0, w.size() - 3) + "y";
        if (verbs.contains(lemma)) return VerbAnalysis{lemma, K::ThirdPerson};
    }
    if (ends_with(w, "es")) {
        auto lemma = w.substr(0, w.size() - 2);
        if (verbs.contains(lemma)) return VerbAnalysis{lemma, K::ThirdPerson};
    }
    if (ends_with(w, "s") && !ends_with(w, "ss")) {
        auto lemma = w.substr(0, w.size() - 1);
        if (verbs.contains(lemma)) return VerbAnalysis{lemma, K::ThirdPerson};
    }
    return std::nullopt;
}

std::optional<std::string> noun_lemma(const std::string& lower, const Lexicon& lexicon) {
    if (lexicon.contains(lower)) return lower;
    if (ends_with(lower, "ies")) {
        auto c = lower.substr(0, lower.size() - 3) + "y";
        if (lexicon.contains(c)) return c;
    }
    if (ends_with(lower, "es")) {
        auto c = lower.substr(0, lower.size() - 2);
        if (lexicon.contains(c)) return c;
    }
    if (ends_with(lower, "s") && !ends_with(lower, "ss")) {
        auto c = lower.substr(0, lower.size() - 1);
        if (lexicon.contains(c)) return c;
    }
    return std::nullopt;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : split_tokens(text)) out.push_back(std::move(t.text));
    return out;
}

AnnotatedCaption recount(std::vector<Token> tokens) {
    AnnotatedCaption a;
    for (const auto& t : tokens) {
        if (!t.is_word) continue;
        ++a.n_word;
        if (t.is_entity) ++a.ent;
        if (t.is_numeric) ++a.num;
        if (t.pos == Pos::Verb) {
            ++a.v_total;
            if (t.verb_form == VerbForm::PresInd) ++a.count_pres_ind;
        }
        if (t.pos == Pos::Noun) a.nouns.push_back(t.lemma);
    }
    a.tokens = std::move(tokens);
    return a;
}

AnnotatedCaption annotate(std::string_view text, const Lexicon& lexicon) {
    const auto& lists = bundled_word_lists();
    const auto raw = split_tokens(text);
    std::vector<Token> tokens;
    tokens.reserve(raw.size());

    for (std::size_t i = 0; i < raw.size(); ++i) {
        Token t;
        t.text = raw[i].text;
        const auto lower = ascii_lower(t.text);
        t.lemma = lower;
        t.is_word = std::any_of(t.text.begin(), t.text.end(), is_alnum);
        const std::string prev = i > 0 ? ascii_lower(raw[i - 1].text) : std::string();
        const bool prev_numeric = !tokens.empty() && tokens.back().is_numeric;

        if (!t.is_word) {
            tokens.push_back(std::move(t));
            continue;
        }
        // Numbers.
        if (is_numeric_text(t.text) || lists.number_words.contains(lower)) {
            t.pos = Pos::Num;
            t.is_numeric = true;
            tokens.push_back(std::move(t));
            continue;
        }
        // Named entities. Closed-class words never qualify.
        if (!lists.function_words.contains(lower)) {
            const bool capitalized = is_capitalized(t.text);
            const bool in_gazetteer = capitalized && lists.gazetteer.contains(lower);
            if ((capitalized && !raw[i].sentence_initial) || is_all_caps(t.text) || in_gazetteer) {
                t.pos = Pos::Propn;
                t.is_entity = true;
                tokens.push_back(std::move(t));
                continue;
            }
        }
        // Time-of-day markers after a number ("10 am") are not the verb "am".
        if (prev_numeric && (lower == "am" || lower == "pm")) {
            tokens.push_back(std::move(t));
            continue;
        }
        // Verbs. A word right after a determiner is read as nominal.
        if (!is_determiner(prev) && !lists.function_words.contains(lower)) {
            auto analysis = auxiliary(lower);
            if (!analysis) analysis = lexical_verb(lower, lists);
            if (analysis) {
                using K = VerbAnalysis::Kind;
                t.pos = Pos::Verb;
                t.lemma = analysis->lemma;
                bool present = false;
                switch (analysis->kind) {
                    case K::PresentAux:
                    case K::ThirdPerson: present = true; break;
                    case K::Base: present = prev != "to"; break;
                    default: present = false;
                }
                t.verb_form = present ? VerbForm::PresInd : VerbForm::OtherVerb;
                tokens.push_back(std::move(t));
                continue;
            }
        }
        // Common nouns known to the lexicon.
        if (!lists.function_words.contains(lower)) {
            if (auto lemma = noun_lemma(lower, lexicon)) {
                t.pos = Pos::Noun;
                t.lemma = *lemma;
            }
        }
        tokens.push_back(std::move(t));
    }
    return recount(std::move(tokens));
}

}  // namespace replimit
