#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lightdxml/bundle.hpp"
#include "lightdxml/dataset.hpp"

namespace lightdxml {

struct PredictConfig {
    double beta = 0.75;
    std::size_t k_shortlist = 500;
    std::size_t k_output = 5;
    /// 0 defers to the index's own setting.
    std::size_t ef_search = 0;

    static PredictConfig from(const TrainConfig& config);
    /// Throws ConfigError.
    void validate() const;
};

/// A shortlisted label with both raw scores.
struct Candidate {
    LabelId label = 0;
    double logit = 0.0;
    double cosine = 0.0;
};

using PredictionRow = std::vector<ScoredLabel>;

/// beta * sigmoid(logit) + (1 - beta) * sigmoid(cosine).
double ensemble_score(double logit, double cosine, double beta);

/// Shortlists the transformed feature through the index and attaches classifier logits.
std::vector<Candidate> shortlist_candidates(const ModelBundle& bundle, const Eigen::Ref<const Vector>& dense,
                                            const PredictConfig& config);

/// Top-k candidates by ensemble score; ties go to the lower label.
PredictionRow rank_candidates(std::span<const Candidate> candidates, double beta, std::size_t k);

/// Prediction for one dense (embedded, optionally normalized) point. Labels outside
/// the shortlist are never scored. Throws Error for an untrained bundle.
PredictionRow predict(const ModelBundle& bundle, const Eigen::Ref<const Vector>& dense, const PredictConfig& config);

/// Row-wise predict over dense features (parallel across rows).
std::vector<PredictionRow> predict_dense(const ModelBundle& bundle, const RowMatrix& dense,
                                         const PredictConfig& config);

/// Embeds the corpus with the bundle's table, then predicts every point.
std::vector<PredictionRow> predict_batch(const ModelBundle& bundle, const Corpus& corpus, const PredictConfig& config);

/// One line per point: space-separated "label:score" with 6 decimals.
void write_predictions(std::ostream& out, std::span<const PredictionRow> rows);
/// Inverse of write_predictions (scores carry the 6-decimal rounding).
std::vector<PredictionRow> parse_predictions(std::istream& in);

}  // namespace lightdxml
