#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "fixtures.hpp"
#include "lightdxml/features.hpp"
#include "lightdxml/metrics.hpp"

using namespace lightdxml;

namespace {

PredictionRow row_of(std::initializer_list<LabelId> labels) {
    PredictionRow row;
    double score = 1.0;
    for (const LabelId l : labels) {
        row.push_back({l, score});
        score -= 0.1;
    }
    return row;
}

PropensityModel fixed_propensities(std::vector<double> p) {
    PropensityModel m;
    m.p = std::move(p);
    return m;
}

}  // namespace

TEST(Precision, HandCases) {
    const std::vector<PredictionRow> preds = {row_of({1, 2, 3}), row_of({4, 5, 6})};
    const Truth truth = {{1, 3}, {6}};
    EXPECT_DOUBLE_EQ(precision_at_k(preds, truth, 1), 0.5);
    EXPECT_DOUBLE_EQ(precision_at_k(preds, truth, 3), (2.0 / 3.0 + 1.0 / 3.0) / 2.0);
    const std::vector<PredictionRow> one = {row_of({0, 7, 2})};
    EXPECT_NEAR(precision_at_k(one, Truth{{0, 2, 9}}, 3), 2.0 / 3.0, 1e-15);
}

TEST(Precision, ShortRowsCountAsMisses) {
    const std::vector<PredictionRow> preds = {row_of({1})};
    EXPECT_DOUBLE_EQ(precision_at_k(preds, Truth{{1, 2}}, 3), 1.0 / 3.0);
}

TEST(Precision, UnlabeledPointsSkipped) {
    const std::vector<PredictionRow> preds = {row_of({1}), row_of({2})};
    EXPECT_DOUBLE_EQ(precision_at_k(preds, Truth{{1}, {}}, 1), 1.0);
    EXPECT_DOUBLE_EQ(precision_at_k(preds, Truth{{}, {}}, 1), 0.0);
}

TEST(Precision, BadArgumentsThrow) {
    const std::vector<PredictionRow> preds = {row_of({1})};
    EXPECT_THROW(precision_at_k(preds, Truth{{1}}, 0), std::invalid_argument);
    EXPECT_THROW(precision_at_k(preds, Truth{{1}, {2}}, 1), std::invalid_argument);
}

TEST(Propensity, KnownValue) {
    const std::vector<std::uint64_t> freq = {0};
    const auto m = propensities(freq, 1000, 0.55, 1.5);
    EXPECT_NEAR(m.p[0], 0.1133248673455076, 1e-12);
}

TEST(Propensity, ApproachesOneAndIsMonotone) {
    const std::vector<std::uint64_t> freq = {0, 1, 2, 5, 10, 100, 1000, 100000, 1000000000};
    const auto m = propensities(freq, 1000);
    EXPECT_GE(m.p.back(), 0.999);
    for (std::size_t i = 1; i < m.p.size(); ++i) {
        EXPECT_GT(m.p[i], m.p[i - 1]);
    }
    for (const double p : m.p) {
        EXPECT_GT(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(Propensity, TinyCorpusClampsToOne) {
    const std::vector<std::uint64_t> freq = {0, 1};
    const auto m = propensities(freq, 2);
    EXPECT_EQ(m.p[0], 1.0);
    EXPECT_EQ(m.p[1], 1.0);
}

TEST(Psp, HandCase) {
    const auto m = fixed_propensities({0.2, 1.0, 0.5});
    const std::vector<PredictionRow> preds = {row_of({2, 0}), row_of({1, 2})};
    const Truth truth = {{0, 1}, {1}};
    EXPECT_DOUBLE_EQ(psp_at_k(preds, truth, m, 1), 0.5);
    EXPECT_NEAR(psp_at_k(preds, truth, m, 2), 0.9166666666666667, 1e-15);
}

TEST(Psp, UniformPropensityEqualsNormalizedPrecision) {
    // With equal propensities PSP@k is hits / min(k, |P|).
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n_labels = 2 + rng() % 20;
        const std::size_t n_points = 1 + rng() % 10;
        const std::size_t k = 1 + rng() % 5;
        const auto m = fixed_propensities(std::vector<double>(n_labels, 0.37));
        std::vector<PredictionRow> preds;
        Truth truth;
        double expect = 0.0;
        std::size_t scored = 0;
        for (std::size_t i = 0; i < n_points; ++i) {
            std::vector<LabelId> all(n_labels);
            std::iota(all.begin(), all.end(), LabelId{0});
            std::shuffle(all.begin(), all.end(), rng);
            PredictionRow row;
            for (std::size_t r = 0; r < std::min(k, n_labels); ++r) row.push_back({all[r], 1.0});
            std::shuffle(all.begin(), all.end(), rng);
            std::vector<LabelId> pos(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(rng() % n_labels));
            std::sort(pos.begin(), pos.end());
            if (!pos.empty()) {
                std::size_t hits = 0;
                for (const auto& s : row) hits += std::binary_search(pos.begin(), pos.end(), s.label) ? 1 : 0;
                expect += static_cast<double>(hits) / static_cast<double>(std::min(k, pos.size()));
                ++scored;
            }
            preds.push_back(row);
            truth.push_back(pos);
        }
        if (scored > 0) expect /= static_cast<double>(scored);
        EXPECT_NEAR(psp_at_k(preds, truth, m, k), expect, 1e-12);
    }
}

TEST(Psp, BoundedAndPerfectRankingScoresOne) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> prop(0.05, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n_labels = 3 + rng() % 15;
        std::vector<double> p(n_labels);
        for (auto& x : p) x = prop(rng);
        const auto m = fixed_propensities(p);
        std::vector<LabelId> all(n_labels);
        std::iota(all.begin(), all.end(), LabelId{0});
        std::shuffle(all.begin(), all.end(), rng);
        std::vector<LabelId> pos(all.begin(), all.begin() + 1 + static_cast<std::ptrdiff_t>(rng() % (n_labels - 1)));
        std::sort(pos.begin(), pos.end());
        const std::size_t k = 1 + rng() % 5;

        // Random ranking: PSP in [0, 1].
        std::shuffle(all.begin(), all.end(), rng);
        PredictionRow random_row;
        for (std::size_t r = 0; r < std::min(k, n_labels); ++r) random_row.push_back({all[r], 1.0});
        const std::vector<PredictionRow> rand_preds = {random_row};
        const double v = psp_at_k(rand_preds, Truth{pos}, m, k);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);

        // Positives ordered by 1/p descending: PSP = 1.
        std::vector<LabelId> ideal = pos;
        std::sort(ideal.begin(), ideal.end(), [&](LabelId a, LabelId b) { return p[a] < p[b]; });
        PredictionRow best;
        for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) best.push_back({ideal[r], 1.0});
        const std::vector<PredictionRow> best_preds = {best};
        EXPECT_NEAR(psp_at_k(best_preds, Truth{pos}, m, k), 1.0, 1e-12);
    }
}

TEST(Metrics, RowsBeyondKDoNotMatter) {
    std::mt19937_64 rng(6);
    const auto m = fixed_propensities({0.3, 0.5, 0.9, 0.2, 0.7, 0.4});
    for (int trial = 0; trial < 30; ++trial) {
        PredictionRow row = row_of({0, 1, 2, 3, 4, 5});
        std::shuffle(row.begin(), row.end(), rng);
        PredictionRow tail = row;
        std::shuffle(tail.begin() + 2, tail.end(), rng);
        const std::vector<PredictionRow> a = {row};
        const std::vector<PredictionRow> b = {tail};
        const Truth truth = {{1, 3, 4}};
        EXPECT_EQ(precision_at_k(a, truth, 2), precision_at_k(b, truth, 2));
        EXPECT_EQ(psp_at_k(a, truth, m, 2), psp_at_k(b, truth, m, 2));
    }
}

TEST(Metrics, PrecisionNonIncreasingWithPerfectPrefix) {
    // All positives ranked first: P@k = min(|P|, k) / k.
    const std::vector<PredictionRow> preds = {row_of({4, 2, 9, 1, 0})};
    const Truth truth = {{2, 4}};
    EXPECT_DOUBLE_EQ(precision_at_k(preds, truth, 1), 1.0);
    EXPECT_DOUBLE_EQ(precision_at_k(preds, truth, 3), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(precision_at_k(preds, truth, 5), 2.0 / 5.0);
}

TEST(Evaluate, CountsAndCsv) {
    const auto m = fixed_propensities({1.0, 1.0, 1.0});
    const std::vector<PredictionRow> preds = {row_of({0, 1, 2}), row_of({1}), row_of({2})};
    const auto report = evaluate(preds, Truth{{0}, {}, {1}}, m);
    EXPECT_EQ(report.scored_points, 2u);
    EXPECT_EQ(report.skipped_points, 1u);
    EXPECT_DOUBLE_EQ(report.precision[0], 0.5);
    EXPECT_FALSE(report.has_nan());
    const auto csv = report_csv(report);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "p1,p3,p5,psp1,psp3,psp5,scored,skipped");
    EXPECT_NE(format_report(report, false).find("PSP"), std::string::npos);
}

TEST(Sweep, BetaRowsMatchDirectEvaluation) {
    const auto& t = fixture::small_model();
    const auto dense = embed_points(t.test, t.bundle.embeddings, t.bundle.config.normalize_features).matrix;
    const auto truth = truth_of(t.test);
    const auto model = propensities(t.bundle.label_frequency, t.bundle.n_train_points);
    const std::vector<double> betas = {0.0, 0.25, 0.5, 0.75, 1.0};
    const auto base = PredictConfig::from(t.bundle.config);
    const auto rows = sweep_beta(t.bundle, dense, truth, model, betas, base);
    ASSERT_EQ(rows.size(), betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) {
        auto cfg = base;
        cfg.beta = betas[i];
        const auto preds = predict_dense(t.bundle, dense, cfg);
        EXPECT_EQ(rows[i].value, betas[i]);
        EXPECT_DOUBLE_EQ(rows[i].p1, precision_at_k(preds, truth, 1));
        EXPECT_DOUBLE_EQ(rows[i].psp1, psp_at_k(preds, truth, model, 1));
    }
    const auto csv = sweep_csv("beta", rows);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    EXPECT_THROW(sweep_beta(t.bundle, dense, truth, model, {}, base), std::invalid_argument);
}
