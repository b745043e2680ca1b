#include "lightdxml/shortlist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lightdxml {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        dot += a[d] * b[d];
        aa += a[d] * a[d];
        bb += b[d] * b[d];
    }
    if (bb == 0.0) {
        return -1.0;
    }
    if (aa == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(aa) * std::sqrt(bb));
}

std::vector<ScoredLabel> brute_force_topk(const RowMatrix& labels, std::span<const double> query, std::size_t k) {
    if (static_cast<Eigen::Index>(query.size()) != labels.cols()) {
        throw DimensionError("query dim does not match label embeddings");
    }
    std::vector<ScoredLabel> all(static_cast<std::size_t>(labels.rows()));
    for (Eigen::Index j = 0; j < labels.rows(); ++j) {
        all[static_cast<std::size_t>(j)] = {
            static_cast<LabelId>(j),
            cosine_similarity(query, std::span<const double>(labels.row(j).data(), labels.cols()))};
    }
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
    all.resize(k);
    return all;
}

Shortlist build_shortlists(const AnnIndex& index, const RowMatrix& features, std::size_t k) {
    if (k == 0) {
        throw Error("shortlist size must be at least 1");
    }
    if (static_cast<std::size_t>(features.cols()) != index.dim()) {
        throw DimensionError("feature dim " + std::to_string(features.cols()) + " != index dim " +
                             std::to_string(index.dim()));
    }
    Shortlist out;
    out.width = std::min(k, index.size());
    const auto n = static_cast<std::ptrdiff_t>(features.rows());
    out.labels.resize(static_cast<std::size_t>(n) * out.width);
    out.scores.resize(out.labels.size());
    std::size_t degenerate = 0;

#pragma omp parallel for schedule(dynamic, 64) reduction(+ : degenerate)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::span<const double> query(features.row(i).data(), static_cast<std::size_t>(features.cols()));
        if (features.row(i).squaredNorm() == 0.0) {
            ++degenerate;
        }
        const auto found = index.search(query, out.width);
        const std::size_t base = static_cast<std::size_t>(i) * out.width;
        for (std::size_t t = 0; t < out.width; ++t) {
            out.labels[base + t] = found[t].label;
            out.scores[base + t] = found[t].score;
        }
    }
    out.degenerate_queries = degenerate;
    return out;
}

double hnsw_score(const Shortlist& shortlist, std::size_t point, LabelId label) {
    const auto labels = shortlist.row_labels(point);
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
        return 0.0;
    }
    return shortlist.row_scores(point)[static_cast<std::size_t>(it - labels.begin())];
}

}  // namespace lightdxml
