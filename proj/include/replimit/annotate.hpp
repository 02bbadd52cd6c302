#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "replimit/lexicon.hpp"

namespace replimit {

enum class Pos { Noun, Propn, Verb, Num, Other };
enum class VerbForm { None, PresInd, OtherVerb };

std::string_view to_string(Pos pos);
std::string_view to_string(VerbForm form);

struct Token {
    std::string text;
    std::string lemma;
    Pos pos = Pos::Other;
    bool is_entity = false;
    bool is_numeric = false;
    VerbForm verb_form = VerbForm::None;
    bool is_word = false;  // contains at least one ASCII letter or digit; counted in n_word
};

// Every count the generality metrics consume.
struct AnnotatedCaption {
    std::vector<Token> tokens;
    int n_word = 0;
    int ent = 0;
    int num = 0;
    int v_total = 0;
    int count_pres_ind = 0;
    std::vector<std::string> nouns;  // lexicon lemmas of NOUN tokens, in order
};

// Closed word lists compiled into the library.
struct WordLists {
    std::unordered_set<std::string> number_words;
    std::unordered_set<std::string> gazetteer;
    std::unordered_set<std::string> function_words;
    std::unordered_set<std::string> verbs;
    std::vector<std::string> nouns;             // random-caption vocabulary
    std::vector<std::string> verb_list;         // same content as `verbs`, file order
    struct Irregular {
        std::string base;
        bool participle;
    };
    std::unordered_map<std::string, Irregular> irregular_past;  // past / participle form -> base
};

const WordLists& bundled_word_lists();

// Whitespace split, outer punctuation stripped, internal '-' and '/' split,
// empty fragments dropped.
std::vector<std::string> tokenize(std::string_view text);

AnnotatedCaption annotate(std::string_view text, const Lexicon& lexicon);

// Recomputes the aggregate counts and noun list from token flags.
AnnotatedCaption recount(std::vector<Token> tokens);

}  // namespace replimit
