#include <gtest/gtest.h>

#include <sstream>

#include "lightdxml/features.hpp"
#include "oracles.hpp"

using namespace lightdxml;

TEST(EmbedPoints, OneHotPointCopiesRow) {
    const auto table = random_embedding_table(5, 4, 1);
    Corpus c{5, 1, {}};
    c.points.push_back({SparseVector::from_entries({{3, 1.0}}), {0}});
    const auto dense = embed_points(c, table, false);
    EXPECT_EQ(dense.matrix.row(0), table.rows.row(3));
    EXPECT_FALSE(dense.normalized);
}

TEST(EmbedPoints, EmptyRowStaysZeroAndIsCounted) {
    const auto table = random_embedding_table(5, 4, 1);
    Corpus c{5, 1, {}};
    c.points.push_back({SparseVector{}, {}});
    c.points.push_back({SparseVector::from_entries({{1, 2.0}}), {}});
    const auto dense = embed_points(c, table, true);
    EXPECT_EQ(dense.empty_rows, 1u);
    EXPECT_TRUE(dense.matrix.row(0).isZero(0.0));
    EXPECT_NEAR(dense.matrix.row(1).norm(), 1.0, 1e-12);
}

TEST(EmbedPoints, MatchesNaiveLoop) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        oracle::CorpusShape shape;
        shape.n_points = 1 + rng() % 25;
        shape.n_features = 1 + rng() % 12;
        shape.max_features_per_point = 6;
        const auto c = oracle::random_corpus(rng, shape);
        const EmbeddingTable table{oracle::to_row_matrix(oracle::random_dense(rng, shape.n_features, 8))};
        for (const bool normalize : {false, true}) {
            const auto got = embed_points(c, table, normalize);
            const auto want = oracle::embed(c, oracle::to_dense(table.rows), normalize);
            for (std::size_t i = 0; i < c.size(); ++i) {
                for (std::size_t d = 0; d < 8; ++d) {
                    EXPECT_NEAR(got.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)), want[i][d],
                                1e-12);
                }
                if (normalize && !c.points[i].features.empty()) {
                    EXPECT_NEAR(got.matrix.row(static_cast<Eigen::Index>(i)).norm(), 1.0, 1e-6);
                }
            }
        }
    }
}

TEST(EmbedPoints, DimensionMismatchThrows) {
    const auto table = random_embedding_table(4, 3, 1);
    const Corpus c{5, 1, {}};
    EXPECT_THROW(embed_points(c, table, false), DimensionError);
}

TEST(EmbeddingTable, TextRoundTrip) {
    const auto table = random_embedding_table(7, 5, 3);
    std::stringstream io;
    write_embedding_table(io, table);
    const auto back = parse_embedding_table(io);
    EXPECT_EQ(back.rows, table.rows);
}

TEST(EmbeddingTable, IdentityLayout) {
    const auto t = identity_embedding_table(6, 4);
    for (Eigen::Index v = 0; v < 6; ++v) {
        for (Eigen::Index d = 0; d < 4; ++d) {
            EXPECT_EQ(t.rows(v, d), v == d ? 1.0 : 0.0);
        }
    }
}

TEST(Centroids, ExactMeansAndZeroForEmptyLabels) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        oracle::CorpusShape shape;
        shape.n_points = 1 + rng() % 20;
        shape.n_labels = 1 + rng() % 10;
        shape.unlabeled_rate = 0.2;
        const auto c = oracle::random_corpus(rng, shape);
        const auto features = oracle::random_dense(rng, c.size(), 5);
        const auto got = compute_centroids(oracle::to_row_matrix(features), c);
        const auto want = oracle::centroids(features, c);
        const auto stats = label_stats(c);
        std::size_t empty = 0;
        for (std::size_t l = 0; l < c.n_labels; ++l) {
            empty += stats.frequency[l] == 0 ? 1 : 0;
            for (std::size_t d = 0; d < 5; ++d) {
                EXPECT_NEAR(got.matrix(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(d)), want[l][d],
                            1e-12);
            }
        }
        EXPECT_EQ(got.empty_labels.size(), empty);
    }
}

TEST(EmbedPoints, LinearInTable) {
    std::mt19937_64 rng(41);
    oracle::CorpusShape shape;
    shape.n_points = 15;
    const auto c = oracle::random_corpus(rng, shape);
    const EmbeddingTable table{oracle::to_row_matrix(oracle::random_dense(rng, shape.n_features, 5))};
    const EmbeddingTable scaled{2.5 * table.rows};
    const auto a = embed_points(c, table, false).matrix;
    const auto b = embed_points(c, scaled, false).matrix;
    EXPECT_TRUE(b.isApprox(2.5 * a, 1e-12));
}

TEST(Centroids, HandCases) {
    Corpus c{1, 3, {}};
    c.points.push_back({SparseVector{}, {0, 1}});
    c.points.push_back({SparseVector{}, {0, 2}});
    RowMatrix x(2, 2);
    x << 1.0, 0.0, 0.0, 1.0;
    const auto m = compute_centroids(x, c).matrix;
    EXPECT_DOUBLE_EQ(m(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
    EXPECT_EQ(m.row(1), x.row(0));
    EXPECT_EQ(m.row(2), x.row(1));
}
