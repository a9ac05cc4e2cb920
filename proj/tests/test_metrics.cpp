// SPDX-License-Identifier: Apache-2.0
#include <numeric>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "bpx/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bpx;

TEST_CASE("precision and recall examples") {
    const auto truth = BinaryLabelMatrix::from_rows(6, {{1, 3}});
    const std::vector<Ranking> pred{{3, 5, 1}};
    CHECK(precision_at_k(truth, pred, 3) == doctest::Approx(2.0 / 3.0));
    CHECK(recall_at_k(truth, pred, 3) == 1.0);

    const auto single = BinaryLabelMatrix::from_rows(3, {{2}});
    CHECK(precision_at_k(single, std::vector<Ranking>{{2}}, 1) == 1.0);

    const auto four = BinaryLabelMatrix::from_rows(5, {{0, 1, 2, 3}});
    CHECK(recall_at_k(four, std::vector<Ranking>{{2, 4}}, 1) == 0.25);
    CHECK(recall_at_k(four, std::vector<Ranking>{{4}}, 1) == 0.0);

    // empty truth row counts as zero precision and is skipped by recall
    const auto mixed = BinaryLabelMatrix::from_rows(3, {{0}, {}});
    const std::vector<Ranking> two{{0}, {1}};
    CHECK(precision_at_k(mixed, two, 1) == 0.5);
    CHECK(recall_at_k(mixed, two, 1) == 1.0);

    // short rankings count missing slots as wrong
    CHECK(precision_at_k(truth, std::vector<Ranking>{{1}}, 2) == 0.5);

    CHECK_THROWS_AS(precision_at_k(truth, pred, 0), std::invalid_argument);
    const auto none = BinaryLabelMatrix::from_rows(2, {{}, {}});
    CHECK_THROWS_AS(recall_at_k(none, two, 1), std::invalid_argument);
}

TEST_CASE("propensities") {
    const std::vector<std::uint64_t> counts{50, 5, 0};
    const auto p = label_propensities(counts, 1000);
    CHECK(p[0] > p[1]);
    CHECK(p[1] > p[2]);
    for (double v : p) {
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(label_propensities(counts, 2), std::invalid_argument);
    CHECK_THROWS_AS(label_propensities(counts, 10, {1.5, 1.5}), std::invalid_argument);

    SUBCASE("matches a 50-digit evaluation") {
        using big = boost::multiprecision::cpp_dec_float_50;
        const big n = 10000, nj = 100, a = big(55) / 100, b = big(15) / 10;
        const big c = (log(n) - 1) * pow(b + 1, a);
        const big expected = 1 / (1 + c * exp(-a * log(nj + b)));
        const std::vector<std::uint64_t> one{100};
        const auto got = label_propensities(one, 10000);
        CHECK(std::abs(got[0] - expected.convert_to<double>()) <= 1e-14);
    }
}

TEST_CASE("propensity-scored precision") {
    const auto truth = BinaryLabelMatrix::from_rows(2, {{0}});
    const std::vector<Ranking> pred{{0}};
    const std::vector<double> half{0.5, 1.0};
    CHECK(psp_at_k(truth, pred, half, 1) == 2.0);
    CHECK(psp_at_k(truth, std::vector<Ranking>{{1}}, half, 1) == 0.0);
    const std::vector<double> zero{0.0, 1.0};
    CHECK_THROWS_AS(psp_at_k(truth, pred, zero, 1), std::invalid_argument);
}

TEST_CASE("metrics agree with set-intersection oracles") {
    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = 1 + rng.below(50), m = 1 + rng.below(30);
        auto truth = testing::random_labels(rng, n, m, 0.15);
        if (truth.nnz() == 0) truth = BinaryLabelMatrix::from_rows(m, std::vector<std::vector<index_t>>(n, {0}));
        std::vector<Ranking> pred(n);
        for (auto& r : pred) {
            std::vector<index_t> all(m);
            std::iota(all.begin(), all.end(), 0);
            rng.shuffle(all.begin(), all.end());
            all.resize(rng.below(m + 1));
            r = all;
        }
        std::vector<double> props(m), unit(m, 1.0);
        for (auto& p : props) p = 0.05 + 0.95 * rng.uniform();
        for (std::size_t k : {1u, 3u, 5u}) {
            const auto o = oracle::ranking_scores(truth, pred, props, k);
            const auto p = precision_at_k(truth, pred, k);
            CHECK(p == doctest::Approx(o.precision).epsilon(1e-12));
            CHECK(recall_at_k(truth, pred, k) == doctest::Approx(o.recall).epsilon(1e-12));
            const auto psp = psp_at_k(truth, pred, props, k);
            CHECK(psp == doctest::Approx(o.psp).epsilon(1e-12));
            CHECK(psp_at_k(truth, pred, unit, k) == p);
            CHECK(psp >= p);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("speedup") {
    PredictionResult r;
    r.mults_used.assign(7, 12);
    CHECK(speedup(r, 100.0) == doctest::Approx(100.0 / 12.0));
    PredictionResult naive;
    naive.mults_used.assign(4, 37);
    CHECK(speedup(naive, 37.0) == 1.0);
    PredictionResult degenerate;
    degenerate.mults_used.assign(3, 1 + 20);
    CHECK(speedup(degenerate, 20.0) <= 1.0);
    PredictionResult halved;
    halved.mults_used.assign(7, 2 + 5);
    CHECK(speedup(halved, 100.0) > speedup(r, 100.0));
    CHECK_THROWS_AS(speedup(PredictionResult{}, 10.0), std::invalid_argument);
}

TEST_CASE("evaluation report") {
    const auto truth = BinaryLabelMatrix::from_rows(4, {{0, 1}, {2}});
    PredictionResult r;
    r.top_labels = {{0, 3, 1}, {2, 0, 1}};
    r.mults_used = {3, 3};
    const std::vector<double> props(4, 1.0);
    const std::vector<std::size_t> ks{1, 3};
    const auto rows = evaluate(truth, r, props, ks, 4.0);
    std::ostringstream csv, table;
    write_metrics_csv(csv, rows);
    CHECK(csv.str().rfind("metric,k,value\n", 0) == 0);
    CHECK(csv.str().find("P,1,1\n") != std::string::npos);
    write_summary_table(table, rows);
    CHECK(table.str().find("100.00") != std::string::npos);
    CHECK(table.str().find("1x") != std::string::npos);
}
