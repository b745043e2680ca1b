#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lightdxml/hnsw.hpp"
#include "lightdxml/types.hpp"

namespace lightdxml {

/// <a, b> / (||a|| ||b||). A zero `b` scores -1; a zero `a` scores 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Exact top-k by cosine over the rows of `labels`, ties to the lower label.
std::vector<ScoredLabel> brute_force_topk(const RowMatrix& labels, std::span<const double> query, std::size_t k);

/// Per-point ANN top-k lists, stored flat: row i occupies [i*width, (i+1)*width).
/// The stored lists are pure index output; training adds positives downstream.
struct Shortlist {
    std::size_t width = 0;
    std::vector<LabelId> labels;
    std::vector<double> scores;
    /// Points whose query vector was zero.
    std::size_t degenerate_queries = 0;

    std::size_t n_points() const noexcept { return width == 0 ? 0 : labels.size() / width; }
    std::span<const LabelId> row_labels(std::size_t point) const {
        return std::span<const LabelId>(labels).subspan(point * width, width);
    }
    std::span<const double> row_scores(std::size_t point) const {
        return std::span<const double>(scores).subspan(point * width, width);
    }
};

/// Queries the index with every feature row. Rows hold min(k, L) entries.
Shortlist build_shortlists(const AnnIndex& index, const RowMatrix& features, std::size_t k);

/// Stored cosine if `label` is in the point's shortlist, else 0.
double hnsw_score(const Shortlist& shortlist, std::size_t point, LabelId label);

}  // namespace lightdxml
