#include "lightdxml/inference.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace lightdxml {

PredictConfig PredictConfig::from(const TrainConfig& config) {
    return {config.beta, config.shortlist_k, config.k_output, config.ef_search};
}

void PredictConfig::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ConfigError("beta must lie in [0, 1]");
    }
    if (k_shortlist == 0 || k_output == 0 || k_output > k_shortlist) {
        throw ConfigError("need 1 <= k_output <= k_shortlist");
    }
}

double ensemble_score(double logit, double cosine, double beta) {
    return beta * sigmoid(logit) + (1.0 - beta) * sigmoid(cosine);
}

std::vector<Candidate> shortlist_candidates(const ModelBundle& bundle, const Eigen::Ref<const Vector>& dense,
                                            const PredictConfig& config) {
    if (!bundle.trained()) {
        throw Error("bundle is not trained");
    }
    if (static_cast<std::size_t>(dense.size()) != bundle.dim()) {
        throw DimensionError("predict: feature dim " + std::to_string(dense.size()) + " != model dim " +
                             std::to_string(bundle.dim()));
    }
    const Vector z = transform_point(bundle.model.transform, dense);
    const std::size_t ef = config.ef_search > 0 ? config.ef_search : bundle.index.effective_ef(config.k_shortlist);
    const auto hits = bundle.index.search(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
                                          config.k_shortlist, ef);
    std::vector<Candidate> out;
    out.reserve(hits.size());
    for (const auto& h : hits) {
        out.push_back({h.label, clf_logit(bundle.model.clf, z, h.label), h.score});
    }
    return out;
}

PredictionRow rank_candidates(std::span<const Candidate> candidates, double beta, std::size_t k) {
    struct Ranked {
        ScoredLabel scored;
        double complement;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(candidates.size());
    for (const auto& c : candidates) {
        // The complement separates candidates whose scores both round to 1.0.
        ranked.push_back({{c.label, ensemble_score(c.logit, c.cosine, beta)},
                          ensemble_score(-c.logit, -c.cosine, beta)});
    }
    const auto before = [](const Ranked& a, const Ranked& b) {
        if (a.scored.score != b.scored.score) {
            return a.scored.score > b.scored.score;
        }
        if (a.complement != b.complement) {
            return a.complement < b.complement;
        }
        return a.scored.label < b.scored.label;
    };
    const std::size_t n = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(), before);
    PredictionRow row;
    row.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        row.push_back(ranked[i].scored);
    }
    return row;
}

PredictionRow predict(const ModelBundle& bundle, const Eigen::Ref<const Vector>& dense, const PredictConfig& config) {
    config.validate();
    const auto candidates = shortlist_candidates(bundle, dense, config);
    return rank_candidates(candidates, config.beta, config.k_output);
}

std::vector<PredictionRow> predict_dense(const ModelBundle& bundle, const RowMatrix& dense,
                                         const PredictConfig& config) {
    config.validate();
    if (!bundle.trained()) {
        throw Error("bundle is not trained");
    }
    if (static_cast<std::size_t>(dense.cols()) != bundle.dim()) {
        throw DimensionError("predict: feature dim " + std::to_string(dense.cols()) + " != model dim " +
                             std::to_string(bundle.dim()));
    }
    const auto n = static_cast<std::ptrdiff_t>(dense.rows());
    std::vector<PredictionRow> rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Vector x = dense.row(i).transpose();
        rows[static_cast<std::size_t>(i)] =
            rank_candidates(shortlist_candidates(bundle, x, config), config.beta, config.k_output);
    }
    return rows;
}

std::vector<PredictionRow> predict_batch(const ModelBundle& bundle, const Corpus& corpus, const PredictConfig& config) {
    if (corpus.n_features != bundle.vocab_size()) {
        throw DimensionError("predict: corpus has V=" + std::to_string(corpus.n_features) + ", bundle expects " +
                             std::to_string(bundle.vocab_size()));
    }
    const auto features = embed_points(corpus, bundle.embeddings, bundle.config.normalize_features);
    return predict_dense(bundle, features.matrix, config);
}

void write_predictions(std::ostream& out, std::span<const PredictionRow> rows) {
    char buf[64];
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%s%u:%.6f", j == 0 ? "" : " ", row[j].label, row[j].score);
            out << buf;
        }
        out << '\n';
    }
}

std::vector<PredictionRow> parse_predictions(std::istream& in) {
    std::vector<PredictionRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        PredictionRow row;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) {
                ++pos;
            }
            if (pos >= line.size()) {
                break;
            }
            std::size_t end = line.find_first_of(" \t\r", pos);
            if (end == std::string::npos) {
                end = line.size();
            }
            const std::string_view token(line.data() + pos, end - pos);
            const auto colon = token.find(':');
            ScoredLabel s;
            const auto* tend = token.data() + token.size();
            if (colon == std::string_view::npos ||
                std::from_chars(token.data(), token.data() + colon, s.label).ptr != token.data() + colon ||
                std::from_chars(token.data() + colon + 1, tend, s.score).ptr != tend) {
                throw DatasetError("bad prediction token '" + std::string(token) + "'", line_no);
            }
            row.push_back(s);
            pos = end;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace lightdxml
