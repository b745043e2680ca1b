#include "lightdxml/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "lightdxml/rng.hpp"

namespace lightdxml {

EmbeddingTable random_embedding_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) {
        throw DimensionError("embedding dimension must be positive");
    }
    Rng rng(derive_seed(seed, "embeddings"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    EmbeddingTable table;
    table.rows.resize(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim));
    for (Eigen::Index v = 0; v < table.rows.rows(); ++v) {
        for (Eigen::Index d = 0; d < table.rows.cols(); ++d) {
            table.rows(v, d) = scale * rng.normal();
        }
    }
    return table;
}

EmbeddingTable identity_embedding_table(std::size_t vocab_size, std::size_t dim) {
    if (dim == 0) {
        throw DimensionError("embedding dimension must be positive");
    }
    EmbeddingTable table;
    table.rows = RowMatrix::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim));
    for (std::size_t v = 0; v < std::min(vocab_size, dim); ++v) {
        table.rows(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v)) = 1.0;
    }
    return table;
}

EmbeddingTable parse_embedding_table(std::istream& in) {
    std::size_t vocab = 0;
    std::size_t dim = 0;
    if (!(in >> vocab >> dim) || dim == 0) {
        throw Error("embedding table: malformed 'V D' header");
    }
    EmbeddingTable table;
    table.rows.resize(static_cast<Eigen::Index>(vocab), static_cast<Eigen::Index>(dim));
    for (Eigen::Index v = 0; v < table.rows.rows(); ++v) {
        for (Eigen::Index d = 0; d < table.rows.cols(); ++d) {
            double x = 0.0;
            if (!(in >> x)) {
                throw Error("embedding table: truncated at row " + std::to_string(v));
            }
            if (!std::isfinite(x)) {
                throw Error("embedding table: non-finite entry at row " + std::to_string(v));
            }
            table.rows(v, d) = x;
        }
    }
    return table;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open embedding table '" + path.string() + "'");
    }
    return parse_embedding_table(in);
}

void write_embedding_table(std::ostream& out, const EmbeddingTable& table) {
    out << table.vocab_size() << ' ' << table.dim() << '\n';
    char buffer[64];
    for (Eigen::Index v = 0; v < table.rows.rows(); ++v) {
        for (Eigen::Index d = 0; d < table.rows.cols(); ++d) {
            if (d > 0) {
                out << ' ';
            }
            const auto r = std::to_chars(buffer, buffer + sizeof(buffer), table.rows(v, d));
            out.write(buffer, r.ptr - buffer);
        }
        out << '\n';
    }
}

void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write embedding table '" + path.string() + "'");
    }
    write_embedding_table(out, table);
}

namespace {

template <typename Row>
void accumulate_row(const SparseVector& features, const EmbeddingTable& table, Row&& row) {
    for (const auto& e : features.entries()) {
        row.noalias() += e.weight * table.rows.row(e.index);
    }
}

template <typename Row>
void normalize_row(Row&& row) {
    const double norm = row.norm();
    if (norm > 0.0) {
        row /= norm;
    }
}

}  // namespace

DenseFeatures embed_points(const Corpus& corpus, const EmbeddingTable& table, bool normalize) {
    if (corpus.n_features != table.vocab_size()) {
        throw DimensionError("corpus has V=" + std::to_string(corpus.n_features) + " but embedding table has " +
                             std::to_string(table.vocab_size()) + " rows");
    }
    DenseFeatures out;
    out.normalized = normalize;
    const auto n = static_cast<std::ptrdiff_t>(corpus.size());
    out.matrix = RowMatrix::Zero(n, static_cast<Eigen::Index>(table.dim()));

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto row = out.matrix.row(i);
        accumulate_row(corpus.points[static_cast<std::size_t>(i)].features, table, row);
        if (normalize) {
            normalize_row(row);
        }
    }
    for (const auto& p : corpus.points) {
        out.empty_rows += p.features.empty() ? 1 : 0;
    }
    return out;
}

Vector embed_point(const SparseVector& features, const EmbeddingTable& table, bool normalize) {
    Vector row = Vector::Zero(static_cast<Eigen::Index>(table.dim()));
    for (const auto& e : features.entries()) {
        if (e.index >= table.vocab_size()) {
            throw DimensionError("feature index " + std::to_string(e.index) + " outside embedding table");
        }
    }
    accumulate_row(features, table, row.transpose());
    if (normalize) {
        normalize_row(row);
    }
    return row;
}

LabelCentroids compute_centroids(const RowMatrix& features, const Corpus& corpus) {
    if (static_cast<std::size_t>(features.rows()) != corpus.size()) {
        throw DimensionError("feature rows (" + std::to_string(features.rows()) + ") != corpus size (" +
                             std::to_string(corpus.size()) + ")");
    }
    LabelCentroids out;
    out.matrix = RowMatrix::Zero(static_cast<Eigen::Index>(corpus.n_labels), features.cols());
    std::vector<std::size_t> counts(corpus.n_labels, 0);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (const LabelId l : corpus.points[i].labels) {
            out.matrix.row(l) += features.row(static_cast<Eigen::Index>(i));
            ++counts[l];
        }
    }
    for (std::size_t l = 0; l < corpus.n_labels; ++l) {
        if (counts[l] == 0) {
            out.empty_labels.push_back(static_cast<LabelId>(l));
        } else {
            out.matrix.row(static_cast<Eigen::Index>(l)) /= static_cast<double>(counts[l]);
        }
    }
    return out;
}

}  // namespace lightdxml
