#include <sstream>

#include "doctest.h"

#include "replimit/errors.hpp"
#include "replimit/genmetrics.hpp"
#include "support/support.hpp"

using namespace replimit;

namespace {

AnnotatedCaption counts(int n_word, int ent, int num, int v_total = 0, int pres = 0) {
    AnnotatedCaption a;
    a.n_word = n_word;
    a.ent = ent;
    a.num = num;
    a.v_total = v_total;
    a.count_pres_ind = pres;
    return a;
}

}  // namespace

TEST_SUITE("genmetrics") {
    TEST_CASE("SI") {
        CHECK(si_score(counts(7, 2, 1)) == doctest::Approx(4.0 / 7.0));
        CHECK(si_score(counts(5, 0, 0)) == 1.0);
        CHECK(si_score(counts(3, 2, 1)) == 0.0);
        CHECK_THROWS_AS(si_score(counts(0, 0, 0)), EmptyCaptionError);
    }

    TEST_CASE("BT with a mini lexicon") {
        const auto lex = testsupport::make_lexicon({{"dog", 18, 8.0}}, 36.0, 8.0);
        CHECK(bt_score(annotate("a dog", lex), lex) == doctest::Approx(0.125));
        CHECK(bt_score(annotate("of the and", lex), lex) == 0.0);
        const auto big = testsupport::make_lexicon({{"dog", 1000, 8.0}}, 1.0, 8.0);
        CHECK(bt_score(annotate("a dog", big), big) == 1.0);
    }

    TEST_CASE("TM") {
        CHECK(tm_score(counts(3, 0, 0, 2, 2)) == 1.0);
        CHECK(tm_score(counts(4, 0, 0, 2, 0)) == 0.0);
        CHECK(tm_score(counts(2, 0, 0, 0, 0)) == 0.5);
    }

    TEST_CASE("DA") {
        const auto lex = testsupport::make_lexicon({{"dog", 1, 6.0}, {"cell", 1, 20.0}}, 1.0, 6.0);
        CHECK(da_score(annotate("a dog", lex), lex) == 0.5);
        CHECK(da_score(annotate("a cell", lex), lex) == 1.0);
        CHECK(da_score(annotate("a xyzzy", lex), lex) == 0.0);
    }

    TEST_CASE("aggregate") {
        CHECK(round2(aggregate(8.18, 3.67, 5.0, 5.15)) == doctest::Approx(5.50));
        CHECK(round2(aggregate(10.0, 10.0, 10.0, 4.61)) == doctest::Approx(8.65));
        CHECK(aggregate(0, 0, 0, 0) == 0.0);
        CHECK_THROWS_AS(aggregate(10.5, 0, 0, 0), ContractError);
        CHECK_THROWS_AS(aggregate(-0.1, 0, 0, 0), ContractError);
        CHECK(aggregate(1, 2, 3, 4) == aggregate(4, 3, 2, 1));
    }

    TEST_CASE("round2 is half-up") {
        CHECK(round2(5.125) == doctest::Approx(5.13));
        CHECK(round2(7.3325) == doctest::Approx(7.33));
        CHECK(round2(0.0) == 0.0);
    }

    TEST_CASE("score_caption on stopwords and on a single noun") {
        const auto lex = testsupport::make_lexicon({{"dog", 0, 4.0}, {"cat", 4, 4.0}}, 2.0, 4.0);
        const auto r = score_caption("of the and", lex);
        CHECK(r.si == 1.0);
        CHECK(r.bt == 0.0);
        CHECK(r.tm == 0.5);
        CHECK(r.da == 0.0);
        CHECK(r.gs == doctest::Approx(3.75));
        // single noun at global depth with no hyponyms: si 1, bt 0, tm 0.5, da 0.5
        const auto d = score_caption("dog", lex);
        CHECK(d.gs == doctest::Approx((10.0 + 0.0 + 5.0 + 5.0) / 4.0));
        CHECK(d.gs == aggregate(10 * d.si, 10 * d.bt, 10 * d.tm, 10 * d.da));
        CHECK_THROWS_AS(score_caption("", lex), EmptyCaptionError);
    }

    TEST_CASE("corpus means, skips and errors") {
        const auto lex = testsupport::make_lexicon({{"dog", 2, 4.0}}, 2.0, 4.0);
        std::istringstream in(R"({"id":"a","caption":"a dog runs"}
{"id":"b","caption":"..."}

{"id":"c","caption":"a dog runs","image":"x.png"})");
        const auto recs = read_caption_jsonl(in);
        REQUIRE(recs.size() == 3);
        CHECK(recs[2].image == "x.png");
        const auto rep = score_corpus(recs, lex);
        CHECK(rep.items.size() == 2);
        CHECK(rep.skipped_ids == std::vector<std::string>{"b"});
        CHECK(rep.mean.gs == doctest::Approx(score_caption("a dog runs", lex).gs));
        const auto j = to_json(rep, true);
        CHECK(j["summary"]["count"] == 2);
        CHECK(j["captions"].size() == 2);
        CHECK_FALSE(to_json(rep, false).contains("captions"));

        CHECK_THROWS_AS(score_corpus({}, lex), ContractError);
        std::istringstream bad("{\"id\":\"a\",\"caption\":\"x\"}\n{nope\n");
        try {
            read_caption_jsonl(bad, "c.jsonl");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("c.jsonl:2") != std::string::npos);
        }
        std::istringstream missing("{\"caption\":\"x\"}\n");
        CHECK_THROWS_AS(read_caption_jsonl(missing), ParseError);
    }

    TEST_CASE("corpus mean of two reports") {
        const auto lex = testsupport::make_lexicon({{"dog", 2, 4.0}}, 2.0, 4.0);
        std::vector<CaptionRecord> recs{{"1", "Johnson went to USC", ""}, {"2", "a dog runs", ""}};
        const auto rep = score_corpus(recs, lex);
        const double expected = (rep.items[0].report.gs + rep.items[1].report.gs) / 2.0;
        CHECK(rep.mean.gs == doctest::Approx(expected).epsilon(1e-12));
    }
}
