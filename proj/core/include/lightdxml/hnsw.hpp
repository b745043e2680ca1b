#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lightdxml/serialization.hpp"
#include "lightdxml/types.hpp"

namespace lightdxml {

struct HnswParams {
    /// Max links per node on upper layers; layer 0 allows 2 * m.
    std::size_t m = 16;
    std::size_t ef_construction = 200;
    /// Beam width at query time. 0 selects max(100, 4k) for a top-k query.
    std::size_t ef_search = 0;

    friend bool operator==(const HnswParams&, const HnswParams&) = default;
};

/// Hierarchical navigable small-world graph over label embeddings, searched by
/// cosine distance (1 - cosine). Vectors are stored as given, with inverse norms
/// cached; a zero vector has cosine -1 to every query.
///
/// Construction is single-threaded and fully determined by (vectors, params, seed).
/// After construction the index is immutable and safe for concurrent searches.
class AnnIndex {
public:
    AnnIndex() = default;

    /// Throws DimensionError for an empty or zero-dimensional input and Error for
    /// non-finite entries or m < 2.
    static AnnIndex build(const RowMatrix& vectors, const HnswParams& params, std::uint64_t seed);

    /// Top-k labels by cosine, best first, ties broken by lower label. Returns
    /// min(k, size()) entries. A zero-norm query yields labels 0..k-1 with score 0.
    std::vector<ScoredLabel> search(std::span<const double> query, std::size_t k) const;
    std::vector<ScoredLabel> search(std::span<const double> query, std::size_t k, std::size_t ef) const;

    /// Beam width a top-k search uses with the current params.
    std::size_t effective_ef(std::size_t k) const;

    std::size_t size() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
    bool empty() const noexcept { return size() == 0; }
    const HnswParams& params() const noexcept { return params_; }
    void set_ef_search(std::size_t ef) noexcept { params_.ef_search = ef; }
    const RowMatrix& vectors() const noexcept { return vectors_; }

    int max_level() const noexcept { return max_level_; }
    LabelId entry_point() const noexcept { return entry_; }
    int level(LabelId node) const { return levels_.at(node); }
    std::span<const LabelId> neighbors(LabelId node, int layer) const;
    /// Max links allowed at `layer`.
    std::size_t capacity(int layer) const noexcept { return layer == 0 ? 2 * params_.m : params_.m; }

    /// True if every node is reachable from the entry point through layer-0 links.
    bool layer0_connected() const;

    void serialize(ByteWriter& out) const;
    static AnnIndex deserialize(ByteReader& in);

    friend bool operator==(const AnnIndex& a, const AnnIndex& b) {
        return a.params_ == b.params_ && a.vectors_ == b.vectors_ && a.levels_ == b.levels_ && a.links_ == b.links_ &&
               a.entry_ == b.entry_ && a.max_level_ == b.max_level_;
    }

private:
    using Candidate = std::pair<double, LabelId>;  // (distance, node)

    double distance_to(const double* query, double query_inv_norm, LabelId node) const;
    double distance_between(LabelId a, LabelId b) const;
    std::vector<Candidate> search_layer(const double* query, double query_inv_norm,
                                        const std::vector<Candidate>& entry_points, std::size_t ef, int layer) const;
    std::vector<LabelId> select_neighbors(const std::vector<Candidate>& sorted_candidates, std::size_t limit) const;
    void insert(LabelId node, int node_level);
    void repair_layer0();
    std::vector<bool> reachable_layer0() const;

    HnswParams params_;
    RowMatrix vectors_;
    std::vector<double> inv_norms_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<LabelId>>> links_;  // [node][layer]
    LabelId entry_ = 0;
    int max_level_ = -1;
};

}  // namespace lightdxml
