#include <cmath>
#include <cstring>

#include "doctest.h"

#include "replimit/errors.hpp"
#include "replimit/replication.hpp"
#include "replimit/rng.hpp"
#include "support/oracles.hpp"
#include "support/support.hpp"

using namespace replimit;

namespace {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * b[i];
    return dot;
}

GaussianFit fit_of(std::vector<double> mean, std::vector<double> diag) {
    GaussianFit f;
    f.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    f.cov = Eigen::VectorXd::Map(diag.data(), static_cast<Eigen::Index>(diag.size())).asDiagonal();
    return f;
}

}  // namespace

TEST_SUITE("replication") {
    TEST_CASE("toy features: self similarity, negation, translation") {
        ToyImage img(16, 16, 0.0f);
        for (std::size_t y = 4; y < 9; ++y)
            for (std::size_t x = 3; x < 7; ++x) img.at(y, x) = 0.8f;
        const auto f = toy_features(img);
        CHECK(f.size() == kToyFeatureDim);
        CHECK(cosine(f, f) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(toy_features(img) == f);

        ToyImage c(8, 8, 0.3f), neg(8, 8, -0.3f);
        for (std::size_t y = 0; y < 4; ++y) c.at(y, 0) = 0.6f, neg.at(y, 0) = -0.6f;
        CHECK(cosine(toy_features(c), toy_features(neg)) < 0.0);

        ToyImage one(16, 16, 0.0f), shifted(16, 16, 0.0f);
        one.at(1, 1) = 1.0f;
        shifted.at(12, 13) = 1.0f;
        CHECK(cosine(toy_features(one), toy_features(shifted)) < 1.0 - 1e-6);

        CHECK_THROWS_AS(toy_features(ToyImage(7, 16)), ContractError);
        const auto zero = toy_features(ToyImage(16, 16, 0.0f));
        CHECK(cosine(zero, zero) == doctest::Approx(1.0).epsilon(1e-6));
    }

    TEST_CASE("similarity scores") {
        const auto e1 = FeatureMatrix::from_rows({{1, 0}});
        CHECK(similarity_scores(e1, e1).s_values == std::vector<double>{1.0});
        const auto e2 = FeatureMatrix::from_rows({{0, 1}});
        CHECK(similarity_scores(e1, e2).s_values == std::vector<double>{0.0});
        const auto both = FeatureMatrix::from_rows({{1, 0}, {0, 1}});
        const float h = static_cast<float>(1.0 / std::sqrt(2.0));
        const auto mid = FeatureMatrix::normalized(1, 2, {h, h});
        CHECK(similarity_scores(both, mid).s_values[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
        CHECK_THROWS_AS(similarity_scores(both, FeatureMatrix::from_rows({{1, 0, 0}})), ContractError);
    }

    TEST_CASE("nearest-rank quantile examples") {
        SimilarityDistribution s;
        for (int i = 1; i <= 100; ++i) s.s_values.push_back(i / 100.0);
        CHECK(replication_score(s).r == 0.95);
        CHECK(replication_score({{1.0, 1.0, 1.0}}).r == 1.0);
        CHECK(replication_score({{0.3}}).r == 0.3);
        CHECK_THROWS_AS(replication_score({}), ContractError);
        CHECK_THROWS_AS(replication_score({{0.1}}, 0.0), ContractError);
    }

    TEST_CASE("quantile matches the CDF oracle and its band") {
        Rng rng(17);
        for (int trial = 0; trial < 300; ++trial) {
            const auto n = 1 + rng.below(200);
            SimilarityDistribution s;
            for (std::uint64_t i = 0; i < n; ++i) s.s_values.push_back(std::round((rng.uniform() * 2 - 1) * 50) / 50);
            std::sort(s.s_values.begin(), s.s_values.end());
            const auto r = replication_score(s);
            CHECK(r.r == oracle::nearest_rank_by_cdf(s.s_values, 0.95));
            CHECK(r.n_gen == n);
            const auto below = std::count_if(s.s_values.begin(), s.s_values.end(), [&](double v) { return v < r.r; });
            CHECK(static_cast<double>(below) / n <= 0.95 + 1.0 / n);
        }
    }

    TEST_CASE("appending a training row never lowers R") {
        Rng rng(23);
        for (int trial = 0; trial < 50; ++trial) {
            const auto train = oracle::random_features(rng, 1 + rng.below(20), 6);
            const auto gen = oracle::random_features(rng, 1 + rng.below(30), 6);
            const auto before = similarity_scores(train, gen);
            const auto grown = train.with_row_appended(train.row(rng.below(train.n())));
            const auto after = similarity_scores(grown, gen);
            CHECK(replication_score(after).r >= replication_score(before).r);
            const auto fresh = oracle::random_features(rng, 1, 6);
            const auto extended = similarity_scores(train.with_row_appended(fresh.row(0)), gen);
            for (std::size_t i = 0; i < before.s_values.size(); ++i) CHECK(extended.s_values[i] >= before.s_values[i]);
        }
    }

    TEST_CASE("similarities equal the brute-force maximum") {
        Rng rng(4);
        const auto train = oracle::random_features(rng, 15, 9);
        const auto gen = oracle::random_features(rng, 12, 9);
        auto expected = oracle::top1_similarities(train, gen);
        std::sort(expected.begin(), expected.end());
        const auto got = similarity_scores(train, gen).s_values;
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }

    TEST_CASE("gaussian fit") {
        const auto two = FeatureMatrix::from_rows({{1, 0}, {-1, 0}});
        const auto fit = fit_gaussian(two);
        CHECK(fit.mean.norm() == 0.0);
        CHECK(fit.cov(0, 0) == doctest::Approx(2.0));
        CHECK(fit.cov(1, 1) == 0.0);
        CHECK(fit.cov(0, 1) == 0.0);
        const auto same = FeatureMatrix::from_rows({{0.6f, 0.8f}, {0.6f, 0.8f}, {0.6f, 0.8f}});
        CHECK(fit_gaussian(same).cov.norm() == 0.0);
        CHECK_THROWS_AS(fit_gaussian(FeatureMatrix::from_rows({{1, 0}})), ContractError);
    }

    TEST_CASE("frechet distance closed forms") {
        const auto a = fit_of({0.0}, {1.0});
        const auto b = fit_of({1.0}, {4.0});
        CHECK(frechet_distance(a, b) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(std::abs(frechet_distance(a, a)) <= 1e-9);

        Rng rng(8);
        for (std::size_t d = 1; d <= 16; ++d) {
            std::vector<double> ma(d), mb(d), va(d), vb(d);
            for (std::size_t i = 0; i < d; ++i) {
                ma[i] = rng.normal();
                mb[i] = rng.normal();
                va[i] = rng.uniform() * 3;
                vb[i] = rng.uniform() * 3;
            }
            CHECK(frechet_distance(fit_of(ma, va), fit_of(mb, vb)) ==
                  doctest::Approx(oracle::frechet_diagonal(ma, va, mb, vb)).epsilon(1e-9));
        }
        CHECK_THROWS_AS(frechet_distance(a, fit_of({0, 0}, {1, 1})), ContractError);
        CHECK_THROWS_AS(frechet_distance(a, fit_of({0}, {-1})), ContractError);
    }

    TEST_CASE("frechet distance symmetry on full covariances") {
        Rng rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            const auto fa = fit_gaussian(oracle::random_features(rng, 30, 8));
            const auto fb = fit_gaussian(oracle::random_features(rng, 25, 8));
            const double ab = frechet_distance(fa, fb);
            CHECK(ab >= 0.0);
            CHECK(ab == doctest::Approx(frechet_distance(fb, fa)).epsilon(1e-7));
            CHECK(std::abs(frechet_distance(fa, fa)) <= 1e-9);
        }
    }

    TEST_CASE("feature file round trip and errors") {
        testsupport::TempDir dir;
        Rng rng(1);
        const auto f = oracle::random_features(rng, 3, 4);
        save_features(f, dir / "f.rlft");
        const auto bytes = testsupport::read_file(dir / "f.rlft");
        CHECK(bytes.size() == 16 + 3 * 4 * 4);
        CHECK(bytes.substr(0, 4) == "RLFT");
        const auto back = load_features(dir / "f.rlft");
        CHECK(back == f);
        save_features(back, dir / "g.rlft");
        CHECK(testsupport::read_file(dir / "g.rlft") == bytes);

        auto enc = encode_features(f);
        enc.resize(enc.size() - 3);
        try {
            decode_features(enc, "t.rlft");
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("expected 64") != std::string::npos);
            CHECK(msg.find("got 61") != std::string::npos);
        }
        auto bad_magic = encode_features(f);
        bad_magic[0] = 'X';
        CHECK_THROWS_AS(decode_features(bad_magic), FormatError);

        auto zero_row = encode_features(f);
        for (std::size_t k = 0; k < 16; ++k) zero_row[16 + k] = 0;
        CHECK_THROWS_AS(decode_features(zero_row), FormatError);

        // within 1e-3 of unit norm: renormalized on load
        auto near = encode_features(FeatureMatrix::from_rows({{1, 0}}));
        const float slightly = 1.0005f;
        std::memcpy(near.data() + 16, &slightly, 4);
        const auto fixed = decode_features(near);
        CHECK(fixed.row(0)[0] == doctest::Approx(1.0).epsilon(1e-6));
        const float far = 1.1f;
        std::memcpy(near.data() + 16, &far, 4);
        CHECK_THROWS_AS(decode_features(near), FormatError);
    }
}
