#include "lightdxml/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lightdxml/rng.hpp"

namespace lightdxml {

FeatureTransform FeatureTransform::identity(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return {Matrix::Identity(d, d), Vector::Zero(d)};
}

Vector transform_point(const FeatureTransform& transform, const Eigen::Ref<const Vector>& x) {
    if (static_cast<std::size_t>(x.size()) != transform.dim()) {
        throw DimensionError("transform expects dim " + std::to_string(transform.dim()) + ", got " +
                             std::to_string(x.size()));
    }
    return (transform.weight * x + transform.bias).cwiseMax(0.0);
}

RowMatrix transform_features(const FeatureTransform& transform, const RowMatrix& x) {
    if (static_cast<std::size_t>(x.cols()) != transform.dim()) {
        throw DimensionError("transform expects dim " + std::to_string(transform.dim()) + ", got " +
                             std::to_string(x.cols()));
    }
    RowMatrix z = x * transform.weight.transpose();
    z.rowwise() += transform.bias.transpose();
    return z.cwiseMax(0.0);
}

OvaClassifier OvaClassifier::zeros(std::size_t dim, std::size_t n_labels, bool use_bias) {
    return {Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n_labels)),
            Vector::Zero(static_cast<Eigen::Index>(n_labels)), use_bias};
}

double clf_logit(const OvaClassifier& clf, const Eigen::Ref<const Vector>& z, LabelId label) {
    if (label >= clf.n_labels()) {
        throw std::out_of_range("label " + std::to_string(label) + " >= L=" + std::to_string(clf.n_labels()));
    }
    if (static_cast<std::size_t>(z.size()) != clf.dim()) {
        throw DimensionError("classifier expects dim " + std::to_string(clf.dim()));
    }
    return clf.weights.col(label).dot(z) + clf.bias[label];
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double bce_with_logits(double logit, double target) {
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

double bce_gradient(double logit, double target) {
    return sigmoid(logit) - target;
}

ClassifierModel ClassifierModel::initial(std::size_t dim, std::size_t n_labels, bool use_bias) {
    return {FeatureTransform::identity(dim), OvaClassifier::zeros(dim, n_labels, use_bias)};
}

std::vector<LabelId> training_labels(std::span<const LabelId> positives, std::span<const LabelId> shortlisted) {
    std::vector<LabelId> sorted_shortlist(shortlisted.begin(), shortlisted.end());
    std::sort(sorted_shortlist.begin(), sorted_shortlist.end());
    std::vector<LabelId> out;
    out.reserve(positives.size() + sorted_shortlist.size());
    std::set_union(positives.begin(), positives.end(), sorted_shortlist.begin(), sorted_shortlist.end(),
                   std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

void check_shapes(const ClassifierModel& model, const RowMatrix& features, const Corpus& corpus,
                  const Shortlist& shortlist) {
    const std::size_t dim = model.transform.dim();
    if (static_cast<std::size_t>(features.cols()) != dim || model.clf.dim() != dim) {
        throw DimensionError("classifier: feature/transform/classifier dims disagree");
    }
    if (static_cast<std::size_t>(features.rows()) != corpus.size()) {
        throw DimensionError("classifier: feature rows do not match corpus size");
    }
    if (model.clf.n_labels() != corpus.n_labels) {
        throw DimensionError("classifier: label count does not match corpus");
    }
    if (shortlist.width > 0 && shortlist.n_points() != corpus.size()) {
        throw DimensionError("classifier: shortlist does not cover every point");
    }
}

std::span<const LabelId> shortlist_row(const Shortlist& shortlist, std::size_t point) {
    if (shortlist.width == 0) {
        return {};
    }
    return shortlist.row_labels(point);
}

/// A point's training labels with their targets.
struct LabelTargets {
    std::vector<LabelId> labels;
    std::vector<double> targets;
};

LabelTargets make_targets(std::span<const LabelId> positives, std::span<const LabelId> shortlisted,
                          std::span<const LabelId> extra_negatives) {
    LabelTargets out;
    out.labels = training_labels(positives, shortlisted);
    if (!extra_negatives.empty()) {
        std::vector<LabelId> merged;
        std::vector<LabelId> extra(extra_negatives.begin(), extra_negatives.end());
        std::sort(extra.begin(), extra.end());
        std::set_union(out.labels.begin(), out.labels.end(), extra.begin(), extra.end(), std::back_inserter(merged));
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        out.labels = std::move(merged);
    }
    out.targets.reserve(out.labels.size());
    for (const LabelId l : out.labels) {
        out.targets.push_back(std::binary_search(positives.begin(), positives.end(), l) ? 1.0 : 0.0);
    }
    return out;
}

ClassifierGradients batch_gradient(const ClassifierModel& model, const RowMatrix& features,
                                   std::span<const std::uint32_t> points, std::span<const LabelTargets> targets,
                                   double normalizer, std::vector<Eigen::Index>& slot_of) {
    const auto dim = static_cast<Eigen::Index>(model.transform.dim());
    const auto width = static_cast<Eigen::Index>(points.size());
    const auto& clf = model.clf;

    Matrix x(dim, width);
    for (Eigen::Index b = 0; b < width; ++b) {
        x.col(b) = features.row(points[static_cast<std::size_t>(b)]).transpose();
    }
    Matrix pre = model.transform.weight * x;
    pre.colwise() += model.transform.bias;
    const Matrix z = pre.cwiseMax(0.0);

    ClassifierGradients g;
    for (const auto& t : targets) {
        for (const LabelId l : t.labels) {
            if (slot_of[l] < 0) {
                slot_of[l] = static_cast<Eigen::Index>(g.columns.size());
                g.columns.push_back(l);
            }
        }
    }
    const auto n_cols = static_cast<Eigen::Index>(g.columns.size());
    g.weight_columns = Matrix::Zero(dim, n_cols);
    g.bias_columns = Vector::Zero(n_cols);
    Matrix grad_z = Matrix::Zero(dim, width);

    const double inv_norm = 1.0 / normalizer;
    for (Eigen::Index b = 0; b < width; ++b) {
        const auto& t = targets[static_cast<std::size_t>(b)];
        const auto zb = z.col(b);
        auto gzb = grad_z.col(b);
        for (std::size_t k = 0; k < t.labels.size(); ++k) {
            const LabelId l = t.labels[k];
            const auto w = clf.weights.col(l);
            const double logit = w.dot(zb) + clf.bias[l];
            g.loss += bce_with_logits(logit, t.targets[k]);
            const double dl = bce_gradient(logit, t.targets[k]) * inv_norm;
            const Eigen::Index s = slot_of[l];
            g.weight_columns.col(s).noalias() += dl * zb;
            g.bias_columns[s] += dl;
            gzb.noalias() += dl * w;
        }
    }
    g.loss *= inv_norm;
    if (!clf.use_bias) {
        g.bias_columns.setZero();
    }
    for (const LabelId l : g.columns) {
        slot_of[l] = -1;
    }

    const Matrix grad_pre = grad_z.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    g.transform_weight = grad_pre * x.transpose();
    g.transform_bias = grad_pre.rowwise().sum();
    return g;
}

}  // namespace

double classifier_loss(const ClassifierModel& model, const RowMatrix& features, const Corpus& corpus,
                       const Shortlist& shortlist) {
    check_shapes(model, features, corpus, shortlist);
    const RowMatrix z = transform_features(model.transform, features);
    double total = 0.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& positives = corpus.points[i].labels;
        const auto labels = training_labels(positives, shortlist_row(shortlist, i));
        const Vector zi = z.row(static_cast<Eigen::Index>(i)).transpose();
        for (const LabelId l : labels) {
            const double y = std::binary_search(positives.begin(), positives.end(), l) ? 1.0 : 0.0;
            total += bce_with_logits(clf_logit(model.clf, zi, l), y);
        }
    }
    return total;
}

ClassifierGradients classifier_gradient(const ClassifierModel& model, const RowMatrix& features, const Corpus& corpus,
                                        const Shortlist& shortlist, std::span<const std::uint32_t> points,
                                        double normalizer) {
    check_shapes(model, features, corpus, shortlist);
    std::vector<LabelTargets> targets;
    targets.reserve(points.size());
    for (const auto p : points) {
        targets.push_back(make_targets(corpus.points.at(p).labels, shortlist_row(shortlist, p), {}));
    }
    std::vector<Eigen::Index> slot_of(corpus.n_labels, -1);
    return batch_gradient(model, features, points, targets, normalizer, slot_of);
}

ClassifierOptimizer::ClassifierOptimizer(const ClassifierModel& model)
    : transform_weight_(model.transform.weight.rows(), model.transform.weight.cols()),
      transform_bias_(model.transform.bias.size(), 1),
      weights_(model.clf.weights.rows(), model.clf.weights.cols()),
      bias_(model.clf.bias.size(), 1) {}

void ClassifierOptimizer::apply(ClassifierModel& model, const ClassifierGradients& grads, const AdamConfig& config) {
    ++step_;
    adam_update(model.transform.weight, grads.transform_weight, transform_weight_, config, step_);
    adam_update(model.transform.bias, grads.transform_bias, transform_bias_, config, step_);
    const auto dim = static_cast<std::size_t>(model.clf.weights.rows());
    for (std::size_t s = 0; s < grads.columns.size(); ++s) {
        const auto l = static_cast<Eigen::Index>(grads.columns[s]);
        const auto col = static_cast<Eigen::Index>(s);
        adam_update(model.clf.weights.col(l).data(), grads.weight_columns.col(col).data(), weights_.m.col(l).data(),
                    weights_.v.col(l).data(), dim, config, step_);
        if (model.clf.use_bias) {
            adam_update(&model.clf.bias[l], &grads.bias_columns[col], &bias_.m(l, 0), &bias_.v(l, 0), 1, config,
                        step_);
        }
    }
}

ClassifierTrainResult train_classifier(ClassifierModel model, ClassifierOptimizer& optimizer,
                                       const RowMatrix& features, const Corpus& corpus, const Shortlist& shortlist,
                                       const ClassifierTrainConfig& config) {
    if (!(config.learning_rate > 0.0) || config.batch_size == 0) {
        throw Error("classifier: learning_rate and batch_size must be positive");
    }
    check_shapes(model, features, corpus, shortlist);
    ClassifierTrainResult result;
    if (config.epochs == 0 || corpus.size() == 0) {
        result.model = std::move(model);
        return result;
    }

    const AdamConfig adam{config.learning_rate};
    Rng order_rng(derive_seed(config.seed, "classifier/shuffle"));
    Rng negative_rng(derive_seed(config.seed, "classifier/negatives"));
    std::vector<std::uint32_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::vector<Eigen::Index> slot_of(corpus.n_labels, -1);
    std::vector<LabelTargets> targets;
    std::vector<LabelId> negatives;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(std::span<std::uint32_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, order.size() - start);
            const std::span<const std::uint32_t> batch(order.data() + start, len);
            targets.clear();
            for (const auto p : batch) {
                negatives.clear();
                for (std::size_t r = 0; r < config.random_negatives; ++r) {
                    negatives.push_back(static_cast<LabelId>(negative_rng.below(corpus.n_labels)));
                }
                targets.push_back(make_targets(corpus.points[p].labels, shortlist_row(shortlist, p), negatives));
            }
            const auto grads =
                batch_gradient(model, features, batch, targets, static_cast<double>(len), slot_of);
            if (!std::isfinite(grads.loss)) {
                throw TrainingDiverged("classifier: non-finite loss in epoch " + std::to_string(epoch + 1));
            }
            epoch_loss += grads.loss * static_cast<double>(len);
            optimizer.apply(model, grads, adam);
        }
        result.epoch_losses.push_back(epoch_loss);
    }
    result.model = std::move(model);
    return result;
}

}  // namespace lightdxml
