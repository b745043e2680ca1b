#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lightdxml/adam.hpp"
#include "lightdxml/dataset.hpp"
#include "lightdxml/shortlist.hpp"
#include "lightdxml/types.hpp"

namespace lightdxml {

/// z = ReLU(W x + b), trained jointly with the classifier.
struct FeatureTransform {
    Matrix weight;  ///< dim x dim
    Vector bias;    ///< dim

    static FeatureTransform identity(std::size_t dim);
    std::size_t dim() const noexcept { return static_cast<std::size_t>(weight.rows()); }

    friend bool operator==(const FeatureTransform& a, const FeatureTransform& b) {
        return a.weight == b.weight && a.bias == b.bias;
    }
};

/// ReLU(W x + b) for one point.
Vector transform_point(const FeatureTransform& transform, const Eigen::Ref<const Vector>& x);
/// Row-wise transform of an N x dim matrix.
RowMatrix transform_features(const FeatureTransform& transform, const RowMatrix& x);

/// One-vs-all linear scorer: logit_j = w_j . z + bias_j. Column j of `weights` is w_j.
struct OvaClassifier {
    Matrix weights;  ///< dim x L, column-major so each w_j is contiguous
    Vector bias;     ///< L; stays zero when use_bias is false
    bool use_bias = true;

    static OvaClassifier zeros(std::size_t dim, std::size_t n_labels, bool use_bias);
    std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.rows()); }
    std::size_t n_labels() const noexcept { return static_cast<std::size_t>(weights.cols()); }

    friend bool operator==(const OvaClassifier& a, const OvaClassifier& b) {
        return a.use_bias == b.use_bias && a.weights == b.weights && a.bias == b.bias;
    }
};

/// Throws std::out_of_range for label >= L.
double clf_logit(const OvaClassifier& clf, const Eigen::Ref<const Vector>& z, LabelId label);

/// Logistic function, evaluated without overflow for any finite input.
double sigmoid(double x);

/// max(l, 0) - l*y + log(1 + exp(-|l|)).
double bce_with_logits(double logit, double target);

/// d bce / d logit = sigmoid(logit) - target.
double bce_gradient(double logit, double target);

struct ClassifierModel {
    FeatureTransform transform;
    OvaClassifier clf;

    static ClassifierModel initial(std::size_t dim, std::size_t n_labels, bool use_bias);

    friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

/// Sorted union of a point's positives and its shortlisted labels.
std::vector<LabelId> training_labels(std::span<const LabelId> positives, std::span<const LabelId> shortlisted);

/// sum_i sum_{j in P_i u S_i} bce(logit_ij, y_ij).
double classifier_loss(const ClassifierModel& model, const RowMatrix& features, const Corpus& corpus,
                       const Shortlist& shortlist);

/// Gradient restricted to the columns that appear in the batch.
struct ClassifierGradients {
    Matrix transform_weight;
    Vector transform_bias;
    std::vector<LabelId> columns;
    Matrix weight_columns;  ///< dim x columns.size()
    Vector bias_columns;    ///< zero when the classifier has no bias
    double loss = 0.0;
};

/// Gradient of (1/normalizer) * sum over `points` of their shortlist-restricted loss.
ClassifierGradients classifier_gradient(const ClassifierModel& model, const RowMatrix& features, const Corpus& corpus,
                                        const Shortlist& shortlist, std::span<const std::uint32_t> points,
                                        double normalizer);

struct ClassifierTrainConfig {
    double learning_rate = 0.006;
    std::size_t epochs = 1;
    /// Points per mini-batch.
    std::size_t batch_size = 16;
    /// Extra uniformly drawn negatives per point and step.
    std::size_t random_negatives = 0;
    std::uint64_t seed = 0;
};

/// Adam state for the transform and classifier. It persists across training
/// cycles. Classifier columns use lazy updates: a column's moments and weights only
/// change in steps where the column appears in the batch.
class ClassifierOptimizer {
public:
    ClassifierOptimizer() = default;
    explicit ClassifierOptimizer(const ClassifierModel& model);

    void apply(ClassifierModel& model, const ClassifierGradients& grads, const AdamConfig& config);
    std::int64_t steps() const noexcept { return step_; }

private:
    AdamMoments transform_weight_;
    AdamMoments transform_bias_;
    AdamMoments weights_;
    AdamMoments bias_;
    std::int64_t step_ = 0;
};

struct ClassifierTrainResult {
    ClassifierModel model;
    /// Running training loss per epoch (sum over points, measured during the epoch).
    std::vector<double> epoch_losses;
};

/// Mini-batch Adam over shuffled points. Only columns in P_i u S_k(x_i) of the
/// batch (plus random negatives, if enabled) are updated; the transform is updated
/// densely. Throws TrainingDiverged on a non-finite loss.
ClassifierTrainResult train_classifier(ClassifierModel model, ClassifierOptimizer& optimizer,
                                       const RowMatrix& features, const Corpus& corpus, const Shortlist& shortlist,
                                       const ClassifierTrainConfig& config);

}  // namespace lightdxml
