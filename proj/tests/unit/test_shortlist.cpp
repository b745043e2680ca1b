#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lightdxml/features.hpp"
#include "lightdxml/hnsw.hpp"
#include "lightdxml/serialization.hpp"
#include "lightdxml/shortlist.hpp"
#include "oracles.hpp"

using namespace lightdxml;

namespace {

std::vector<double> row(const RowMatrix& m, Eigen::Index i) {
    return {m.row(i).begin(), m.row(i).end()};
}

double recall(const std::vector<ScoredLabel>& got, const std::vector<ScoredLabel>& want) {
    std::set<LabelId> truth;
    for (const auto& s : want) truth.insert(s.label);
    std::size_t hits = 0;
    for (const auto& s : got) hits += truth.count(s.label);
    return static_cast<double>(hits) / static_cast<double>(want.size());
}

// Independent O(L k) selection: k passes, each picking the best unused label.
std::vector<ScoredLabel> selection_topk(const oracle::Dense& labels, const std::vector<double>& q, std::size_t k) {
    std::vector<bool> used(labels.size(), false);
    std::vector<ScoredLabel> out;
    for (std::size_t r = 0; r < std::min(k, labels.size()); ++r) {
        std::size_t best = labels.size();
        double best_score = 0.0;
        for (std::size_t l = 0; l < labels.size(); ++l) {
            if (used[l]) continue;
            const double s = oracle::cosine(q, labels[l]);
            if (best == labels.size() || s > best_score) {
                best = l;
                best_score = s;
            }
        }
        used[best] = true;
        out.push_back({static_cast<LabelId>(best), best_score});
    }
    return out;
}

}  // namespace

TEST(Cosine, ZeroNormConventions) {
    const std::vector<double> a{1.0, 0.0}, zero{0.0, 0.0};
    EXPECT_EQ(cosine_similarity(a, zero), -1.0);
    EXPECT_EQ(cosine_similarity(zero, a), 0.0);
}

TEST(BruteForce, IdenticalEmbeddingsTieToLowerLabel) {
    RowMatrix labels = RowMatrix::Ones(6, 3);
    const std::vector<double> q{0.2, 0.5, 0.1};
    const auto top = brute_force_topk(labels, q, 4);
    ASSERT_EQ(top.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(top[i].label, i);
}

TEST(BruteForce, FullRankingIsPermutation) {
    std::mt19937_64 rng(1);
    const auto labels = oracle::random_unit_rows(rng, 30, 5);
    const auto q = row(oracle::random_unit_rows(rng, 1, 5), 0);
    const auto top = brute_force_topk(labels, q, 30);
    std::set<LabelId> seen;
    for (const auto& s : top) seen.insert(s.label);
    EXPECT_EQ(seen.size(), 30u);
}

TEST(BruteForce, AgreesWithExhaustiveSortAndSelection) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t L = 1 + rng() % 60;
        const std::size_t k = 1 + rng() % 12;
        const auto labels = oracle::random_unit_rows(rng, L, 6);
        const auto q = row(oracle::random_unit_rows(rng, 1, 6), 0);
        const auto got = brute_force_topk(labels, q, k);
        const auto dense = oracle::to_dense(labels);
        const auto sorted = oracle::exhaustive_topk(dense, q, k);
        const auto selected = selection_topk(dense, q, k);
        ASSERT_EQ(got.size(), sorted.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].label, sorted[i].label);
            EXPECT_EQ(got[i].label, selected[i].label);
            EXPECT_NEAR(got[i].score, sorted[i].score, 1e-12);
        }
    }
}

TEST(Hnsw, SingleNode) {
    RowMatrix v(1, 3);
    v << 0.1, 0.2, 0.3;
    const auto index = AnnIndex::build(v, {}, 1);
    const std::vector<double> q{-1.0, 0.5, 2.0};
    const auto res = index.search(q, 5);
    ASSERT_EQ(res.size(), 1u);
    EXPECT_EQ(res[0].label, 0u);
}

TEST(Hnsw, ExactMatchAndBasis) {
    std::mt19937_64 rng(3);
    const auto v = oracle::random_unit_rows(rng, 200, 8);
    const auto index = AnnIndex::build(v, {}, 4);
    const auto top = index.search(row(v, 17), 1);
    EXPECT_EQ(top[0].label, 17u);
    EXPECT_NEAR(top[0].score, 1.0, 1e-12);

    const RowMatrix basis = RowMatrix::Identity(4, 4);
    const auto bi = AnnIndex::build(basis, {}, 1);
    const std::vector<double> e2{0.0, 1.0, 0.0, 0.0};
    const auto res = bi.search(e2, 2);
    // e2 is label 1 in 0-based numbering; the runner-up is the lowest orthogonal label.
    EXPECT_EQ(res[0].label, 1u);
    EXPECT_DOUBLE_EQ(res[0].score, 1.0);
    EXPECT_EQ(res[1].label, 0u);
    EXPECT_DOUBLE_EQ(res[1].score, 0.0);
}

TEST(Hnsw, RecallAgainstBruteForce) {
    std::mt19937_64 rng(4);
    const auto labels = oracle::random_unit_rows(rng, 1000, 32);
    auto index = AnnIndex::build(labels, {16, 200, 100}, 7);
    const auto queries = oracle::random_unit_rows(rng, 200, 32);
    double total = 0.0;
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        const auto query = row(queries, q);
        total += recall(index.search(query, 10), brute_force_topk(labels, query, 10));
    }
    EXPECT_GE(total / 200.0, 0.95);
}

TEST(Hnsw, StructuralInvariants) {
    std::mt19937_64 rng(5);
    for (const std::size_t L : {2u, 17u, 300u, 2000u}) {
        const auto v = oracle::random_unit_rows(rng, L, 12);
        const auto index = AnnIndex::build(v, {8, 50, 0}, L);
        EXPECT_TRUE(index.layer0_connected()) << "L=" << L;
        for (LabelId n = 0; n < L; ++n) {
            for (int layer = 0; layer <= index.level(n); ++layer) {
                const auto nb = index.neighbors(n, layer);
                EXPECT_LE(nb.size(), index.capacity(layer));
                std::set<LabelId> distinct(nb.begin(), nb.end());
                EXPECT_EQ(distinct.size(), nb.size());
                EXPECT_EQ(distinct.count(n), 0u);
            }
        }
    }
}

TEST(Hnsw, DeterministicAndSerializable) {
    std::mt19937_64 rng(6);
    const auto v = oracle::random_unit_rows(rng, 500, 10);
    const auto a = AnnIndex::build(v, {}, 99);
    const auto b = AnnIndex::build(v, {}, 99);
    EXPECT_TRUE(a == b);
    ByteWriter w;
    a.serialize(w);
    ByteReader r(w.bytes());
    const auto c = AnnIndex::deserialize(r);
    EXPECT_TRUE(r.done());
    EXPECT_TRUE(a == c);
}

TEST(Hnsw, ResultsSortedDistinctAndInRange) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t L = 5 + rng() % 400;
        const auto v = oracle::random_unit_rows(rng, L, 6);
        const auto index = AnnIndex::build(v, {}, trial);
        const std::size_t k = 1 + rng() % 30;
        const auto res = index.search(row(oracle::random_unit_rows(rng, 1, 6), 0), k);
        EXPECT_EQ(res.size(), std::min(k, L));
        std::set<LabelId> seen;
        for (std::size_t i = 0; i < res.size(); ++i) {
            EXPECT_LT(res[i].label, L);
            EXPECT_GE(res[i].score, -1.0 - 1e-6);
            EXPECT_LE(res[i].score, 1.0 + 1e-6);
            if (i > 0) EXPECT_TRUE(ranks_before(res[i - 1], res[i]));
            seen.insert(res[i].label);
        }
        EXPECT_EQ(seen.size(), res.size());
    }
}

TEST(Hnsw, ZeroQueryIsDeterministic) {
    std::mt19937_64 rng(8);
    const auto v = oracle::random_unit_rows(rng, 50, 4);
    const auto index = AnnIndex::build(v, {}, 1);
    const std::vector<double> zero(4, 0.0);
    const auto res = index.search(zero, 3);
    ASSERT_EQ(res.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(res[i].label, i);
        EXPECT_EQ(res[i].score, 0.0);
    }
}

TEST(Hnsw, ZeroLabelScoresMinusOne) {
    RowMatrix v(3, 2);
    v << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    const auto index = AnnIndex::build(v, {}, 1);
    const std::vector<double> q{1.0, 1.0};
    const auto res = index.search(q, 3);
    ASSERT_EQ(res.size(), 3u);
    EXPECT_EQ(res[2].label, 1u);
    EXPECT_EQ(res[2].score, -1.0);
}

TEST(Hnsw, RejectsBadInput) {
    EXPECT_THROW(AnnIndex::build(RowMatrix(0, 3), {}, 1), DimensionError);
    EXPECT_THROW(AnnIndex::build(RowMatrix(3, 0), {}, 1), DimensionError);
    RowMatrix bad = RowMatrix::Ones(2, 2);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(AnnIndex::build(bad, {}, 1), Error);
}

TEST(Shortlist, WidthIsMinKL) {
    std::mt19937_64 rng(9);
    const auto labels = oracle::random_unit_rows(rng, 20, 5);
    const auto index = AnnIndex::build(labels, {}, 1);
    const auto features = oracle::random_unit_rows(rng, 7, 5);
    const auto s = build_shortlists(index, features, 50);
    EXPECT_EQ(s.width, 20u);
    EXPECT_EQ(s.n_points(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
        std::set<LabelId> all(s.row_labels(i).begin(), s.row_labels(i).end());
        EXPECT_EQ(all.size(), 20u);
    }
    EXPECT_EQ(build_shortlists(index, features, 3).width, 3u);
    EXPECT_THROW(build_shortlists(index, features, 0), Error);
}

TEST(Shortlist, HnswScoreIsStoredCosineOrZero) {
    std::mt19937_64 rng(10);
    const auto labels = oracle::random_unit_rows(rng, 40, 5);
    const auto index = AnnIndex::build(labels, {}, 1);
    const auto features = oracle::random_unit_rows(rng, 6, 5);
    const auto s = build_shortlists(index, features, 5);
    for (std::size_t i = 0; i < 6; ++i) {
        std::size_t nonzero = 0;
        for (LabelId l = 0; l < 40; ++l) {
            const double h = hnsw_score(s, i, l);
            const auto lbls = s.row_labels(i);
            const auto it = std::find(lbls.begin(), lbls.end(), l);
            if (it == lbls.end()) {
                EXPECT_EQ(h, 0.0);
            } else {
                EXPECT_EQ(h, s.row_scores(i)[static_cast<std::size_t>(it - lbls.begin())]);
            }
            nonzero += h != 0.0 ? 1 : 0;
        }
        EXPECT_LE(nonzero, 5u);
    }
}

TEST(Shortlist, FixtureTrueLabelsInTop20) {
    // Planted vectors as label embeddings: every positive of a point should be
    // among its 20 nearest labels.
    const auto s = generate_synthetic(SyntheticConfig{});
    const auto x = embed_points(s.corpus, identity_embedding_table(64, 64), true).matrix;
    const auto index = AnnIndex::build(s.planted, {}, 3);
    const auto sl = build_shortlists(index, x, 20);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < s.corpus.size(); ++i) {
        const auto lbls = sl.row_labels(i);
        bool all = true;
        for (const LabelId l : s.corpus.points[i].labels) {
            all = all && std::find(lbls.begin(), lbls.end(), l) != lbls.end();
        }
        covered += all ? 1 : 0;
    }
    EXPECT_GE(static_cast<double>(covered) / static_cast<double>(s.corpus.size()), 0.99);
}
