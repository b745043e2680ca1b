#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "lightdxml/dataset.hpp"
#include "lightdxml/types.hpp"

namespace lightdxml {

/// Word-embedding table: one D-dimensional row per vocabulary entry.
struct EmbeddingTable {
    RowMatrix rows;

    std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(rows.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(rows.cols()); }
};

/// Gaussian rows scaled by 1/sqrt(D).
EmbeddingTable random_embedding_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

/// Row v is the unit vector e_v for v < D and zero beyond.
EmbeddingTable identity_embedding_table(std::size_t vocab_size, std::size_t dim);

/// Text format: a "V D" header line followed by V lines of D reals.
EmbeddingTable parse_embedding_table(std::istream& in);
EmbeddingTable load_embedding_table(const std::filesystem::path& path);
void write_embedding_table(std::ostream& out, const EmbeddingTable& table);
void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table);

struct DenseFeatures {
    RowMatrix matrix;
    bool normalized = false;
    /// Rows with no features (left as zero).
    std::size_t empty_rows = 0;
};

/// Row i = sum_v w_iv * table[v], unit-normalized when `normalize` is set.
DenseFeatures embed_points(const Corpus& corpus, const EmbeddingTable& table, bool normalize);

/// Single-row variant of embed_points.
Vector embed_point(const SparseVector& features, const EmbeddingTable& table, bool normalize);

struct LabelCentroids {
    /// L x D; row j is the mean feature row over the positives of label j.
    RowMatrix matrix;
    /// Labels without positives; their rows are zero.
    std::vector<LabelId> empty_labels;
};

LabelCentroids compute_centroids(const RowMatrix& features, const Corpus& corpus);

}  // namespace lightdxml
