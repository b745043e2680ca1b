#include "lightdxml/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "lightdxml/rng.hpp"
#include "lightdxml/shortlist.hpp"

namespace lightdxml {

namespace {

/// Per-thread visited marks; an epoch counter avoids clearing between searches.
struct VisitedSet {
    std::vector<std::uint32_t> marks;
    std::uint32_t epoch = 0;

    void reset(std::size_t n) {
        if (marks.size() < n) {
            marks.assign(n, 0);
            epoch = 0;
        }
        if (++epoch == 0) {
            std::fill(marks.begin(), marks.end(), 0);
            epoch = 1;
        }
    }

    /// Returns true if `id` was not yet visited.
    bool insert(LabelId id) {
        if (marks[id] == epoch) {
            return false;
        }
        marks[id] = epoch;
        return true;
    }
};

thread_local VisitedSet tls_visited;

double inverse_norm(std::span<const double> v) {
    double sq = 0.0;
    for (const double x : v) {
        sq += x * x;
    }
    return sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
}

}  // namespace

double AnnIndex::distance_to(const double* query, double query_inv_norm, LabelId node) const {
    const double inv = inv_norms_[node];
    if (inv == 0.0) {
        return 2.0;
    }
    const double* v = vectors_.row(node).data();
    double dot = 0.0;
    for (Eigen::Index d = 0; d < vectors_.cols(); ++d) {
        dot += query[d] * v[d];
    }
    return 1.0 - dot * query_inv_norm * inv;
}

double AnnIndex::distance_between(LabelId a, LabelId b) const {
    if (inv_norms_[a] == 0.0) {
        return 2.0;
    }
    return distance_to(vectors_.row(a).data(), inv_norms_[a], b);
}

std::span<const LabelId> AnnIndex::neighbors(LabelId node, int layer) const {
    const auto& layers = links_.at(node);
    if (layer < 0 || static_cast<std::size_t>(layer) >= layers.size()) {
        return {};
    }
    return layers[static_cast<std::size_t>(layer)];
}

std::vector<AnnIndex::Candidate> AnnIndex::search_layer(const double* query, double query_inv_norm,
                                                        const std::vector<Candidate>& entry_points, std::size_t ef,
                                                        int layer) const {
    auto& visited = tls_visited;
    visited.reset(size());
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
    std::priority_queue<Candidate> best;
    for (const auto& ep : entry_points) {
        if (visited.insert(ep.second)) {
            frontier.push(ep);
            best.push(ep);
            if (best.size() > ef) {
                best.pop();
            }
        }
    }
    while (!frontier.empty()) {
        const Candidate current = frontier.top();
        if (best.size() >= ef && current > best.top()) {
            break;
        }
        frontier.pop();
        for (const LabelId n : links_[current.second][static_cast<std::size_t>(layer)]) {
            if (!visited.insert(n)) {
                continue;
            }
            const Candidate c{distance_to(query, query_inv_norm, n), n};
            if (best.size() < ef || c < best.top()) {
                frontier.push(c);
                best.push(c);
                if (best.size() > ef) {
                    best.pop();
                }
            }
        }
    }
    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<LabelId> AnnIndex::select_neighbors(const std::vector<Candidate>& sorted_candidates,
                                                std::size_t limit) const {
    // Keep a candidate only if it is closer to the base point than to every
    // neighbor already kept; this spreads links across directions.
    std::vector<LabelId> kept;
    for (const auto& [dist, id] : sorted_candidates) {
        if (kept.size() >= limit) {
            break;
        }
        bool diverse = true;
        for (const LabelId k : kept) {
            if (distance_between(id, k) < dist) {
                diverse = false;
                break;
            }
        }
        if (diverse) {
            kept.push_back(id);
        }
    }
    return kept;
}

void AnnIndex::insert(LabelId node, int node_level) {
    links_[node].assign(static_cast<std::size_t>(node_level) + 1, {});
    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = node_level;
        return;
    }
    const double* q = vectors_.row(node).data();
    const double q_inv = inv_norms_[node];

    std::vector<Candidate> entry_points{{distance_to(q, q_inv, entry_), entry_}};
    for (int layer = max_level_; layer > node_level; --layer) {
        entry_points = {search_layer(q, q_inv, entry_points, 1, layer).front()};
    }
    for (int layer = std::min(node_level, max_level_); layer >= 0; --layer) {
        auto found = search_layer(q, q_inv, entry_points, params_.ef_construction, layer);
        auto selected = select_neighbors(found, params_.m);
        const auto ulayer = static_cast<std::size_t>(layer);
        links_[node][ulayer] = selected;
        for (const LabelId n : selected) {
            auto& theirs = links_[n][ulayer];
            theirs.push_back(node);
            if (theirs.size() > capacity(layer)) {
                std::vector<Candidate> pool;
                pool.reserve(theirs.size());
                for (const LabelId t : theirs) {
                    pool.emplace_back(distance_between(n, t), t);
                }
                std::sort(pool.begin(), pool.end());
                theirs = select_neighbors(pool, capacity(layer));
            }
        }
        entry_points = std::move(found);
    }
    if (node_level > max_level_) {
        max_level_ = node_level;
        entry_ = node;
    }
}

std::vector<bool> AnnIndex::reachable_layer0() const {
    std::vector<bool> seen(size(), false);
    if (empty()) {
        return seen;
    }
    std::vector<LabelId> stack{entry_};
    seen[entry_] = true;
    while (!stack.empty()) {
        const LabelId u = stack.back();
        stack.pop_back();
        for (const LabelId v : links_[u][0]) {
            if (!seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

bool AnnIndex::layer0_connected() const {
    const auto seen = reachable_layer0();
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

void AnnIndex::repair_layer0() {
    // Neighbor pruning can orphan nodes at layer 0. Link each orphan from its
    // closest reachable node, preferring nodes with a free slot.
    auto seen = reachable_layer0();
    LabelId u = 0;
    while (u < size()) {
        if (seen[u]) {
            ++u;
            continue;
        }
        LabelId best_free = u;
        LabelId best_any = u;
        double best_free_dist = 3.0;
        double best_any_dist = 3.0;
        for (LabelId r = 0; r < size(); ++r) {
            if (!seen[r]) {
                continue;
            }
            const double d = distance_between(u, r);
            if (d < best_any_dist) {
                best_any_dist = d;
                best_any = r;
            }
            if (d < best_free_dist && links_[r][0].size() < capacity(0)) {
                best_free_dist = d;
                best_free = r;
            }
        }
        if (best_free == u) {
            // Every reachable node is full: swap out the farthest link and rescan.
            auto& full = links_[best_any][0];
            const auto worst = std::max_element(full.begin(), full.end(), [&](LabelId a, LabelId b) {
                return std::pair{distance_between(best_any, a), a} < std::pair{distance_between(best_any, b), b};
            });
            *worst = u;
            seen = reachable_layer0();
            u = 0;
            continue;
        }
        links_[best_free][0].push_back(u);
        std::vector<LabelId> stack{u};
        seen[u] = true;
        while (!stack.empty()) {
            const LabelId a = stack.back();
            stack.pop_back();
            for (const LabelId b : links_[a][0]) {
                if (!seen[b]) {
                    seen[b] = true;
                    stack.push_back(b);
                }
            }
        }
        ++u;
    }
}

AnnIndex AnnIndex::build(const RowMatrix& vectors, const HnswParams& params, std::uint64_t seed) {
    if (vectors.rows() == 0 || vectors.cols() == 0) {
        throw DimensionError("ANN index needs at least one vector of positive dimension");
    }
    if (!vectors.allFinite()) {
        throw Error("ANN index input contains non-finite values");
    }
    if (params.m < 2 || params.ef_construction == 0) {
        throw Error("ANN index needs m >= 2 and ef_construction >= 1");
    }
    AnnIndex index;
    index.params_ = params;
    index.vectors_ = vectors;
    const std::size_t n = index.size();
    index.inv_norms_.resize(n);
    index.levels_.resize(n);
    index.links_.resize(n);

    Rng rng(derive_seed(seed, "hnsw/levels"));
    const double level_scale = 1.0 / std::log(static_cast<double>(params.m));
    for (std::size_t i = 0; i < n; ++i) {
        index.inv_norms_[i] =
            inverse_norm(std::span<const double>(vectors.row(static_cast<Eigen::Index>(i)).data(), vectors.cols()));
        index.levels_[i] = static_cast<int>(std::floor(-std::log(rng.uniform_positive()) * level_scale));
    }
    for (std::size_t i = 0; i < n; ++i) {
        index.insert(static_cast<LabelId>(i), index.levels_[i]);
    }
    index.repair_layer0();
    return index;
}

std::size_t AnnIndex::effective_ef(std::size_t k) const {
    if (params_.ef_search == 0) {
        return std::max<std::size_t>(100, 4 * k);
    }
    return std::max(params_.ef_search, k);
}

std::vector<ScoredLabel> AnnIndex::search(std::span<const double> query, std::size_t k) const {
    return search(query, k, effective_ef(k));
}

std::vector<ScoredLabel> AnnIndex::search(std::span<const double> query, std::size_t k, std::size_t ef) const {
    if (query.size() != dim()) {
        throw DimensionError("query dim " + std::to_string(query.size()) + " != index dim " + std::to_string(dim()));
    }
    if (k == 0 || empty()) {
        return {};
    }
    k = std::min(k, size());
    ef = std::max(ef, k);
    const double q_inv = inverse_norm(query);
    if (q_inv == 0.0) {
        std::vector<ScoredLabel> out(k);
        for (std::size_t i = 0; i < k; ++i) {
            out[i] = {static_cast<LabelId>(i), 0.0};
        }
        return out;
    }
    // A beam covering half the graph costs more than an exact scan.
    if (2 * ef >= size()) {
        return brute_force_topk(vectors_, query, k);
    }

    std::vector<Candidate> entry_points{{distance_to(query.data(), q_inv, entry_), entry_}};
    for (int layer = max_level_; layer > 0; --layer) {
        entry_points = {search_layer(query.data(), q_inv, entry_points, 1, layer).front()};
    }
    const auto found = search_layer(query.data(), q_inv, entry_points, ef, 0);

    std::vector<ScoredLabel> out;
    out.reserve(found.size());
    for (const auto& [dist, id] : found) {
        out.push_back({id, cosine_similarity(
                               query, std::span<const double>(vectors_.row(id).data(), vectors_.cols()))});
    }
    std::sort(out.begin(), out.end(), ranks_before);
    out.resize(std::min(k, out.size()));
    return out;
}

void AnnIndex::serialize(ByteWriter& out) const {
    out.u64(params_.m);
    out.u64(params_.ef_construction);
    out.u64(params_.ef_search);
    out.row_matrix(vectors_);
    out.u32(entry_);
    out.u32(static_cast<std::uint32_t>(max_level_ + 1));
    for (std::size_t i = 0; i < size(); ++i) {
        out.u32(static_cast<std::uint32_t>(levels_[i]));
        for (const auto& layer : links_[i]) {
            out.u32(static_cast<std::uint32_t>(layer.size()));
            for (const LabelId n : layer) {
                out.u32(n);
            }
        }
    }
}

AnnIndex AnnIndex::deserialize(ByteReader& in) {
    AnnIndex index;
    index.params_.m = in.u64();
    index.params_.ef_construction = in.u64();
    index.params_.ef_search = in.u64();
    index.vectors_ = in.row_matrix();
    const std::size_t n = index.size();
    index.entry_ = in.u32();
    index.max_level_ = static_cast<int>(in.u32()) - 1;
    if ((n == 0) != (index.max_level_ < 0) || (n > 0 && index.entry_ >= n)) {
        throw BundleError(BundleError::Kind::Malformed, "ANN index: bad entry point");
    }
    index.inv_norms_.resize(n);
    index.levels_.resize(n);
    index.links_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        index.inv_norms_[i] = inverse_norm(
            std::span<const double>(index.vectors_.row(static_cast<Eigen::Index>(i)).data(), index.vectors_.cols()));
        const auto level = in.u32();
        if (static_cast<int>(level) > index.max_level_) {
            throw BundleError(BundleError::Kind::Malformed, "ANN index: node level above max level");
        }
        index.levels_[i] = static_cast<int>(level);
        index.links_[i].resize(level + 1);
        for (auto& layer : index.links_[i]) {
            const auto count = in.u32();
            if (count > 2 * index.params_.m) {
                throw BundleError(BundleError::Kind::Malformed, "ANN index: neighbor list too long");
            }
            layer.resize(count);
            for (auto& neighbor : layer) {
                neighbor = in.u32();
                if (neighbor >= n) {
                    throw BundleError(BundleError::Kind::Malformed, "ANN index: neighbor out of range");
                }
            }
        }
    }
    return index;
}

}  // namespace lightdxml
