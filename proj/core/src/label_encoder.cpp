#include "lightdxml/label_encoder.hpp"

#include <cmath>
#include <string>

#include "lightdxml/adam.hpp"
#include "lightdxml/features.hpp"
#include "lightdxml/rng.hpp"

namespace lightdxml {

void LabelEncoderParams::validate() const {
    if (w1.rows() == 0 || w1.cols() == 0 || b1.size() != w1.rows() || w2.cols() != w1.rows() ||
        w2.rows() != w1.cols() || b2.size() != w2.rows()) {
        throw DimensionError("label encoder: inconsistent parameter shapes");
    }
    if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
        throw DimensionError("label encoder: non-finite parameters");
    }
}

LabelEncoderParams init_label_encoder(std::size_t dim, std::size_t hidden_dim, std::uint64_t seed) {
    if (dim == 0 || hidden_dim == 0) {
        throw DimensionError("label encoder dimensions must be positive");
    }
    Rng rng(derive_seed(seed, "label_encoder/init"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    const auto d = static_cast<Eigen::Index>(dim);
    const auto h = static_cast<Eigen::Index>(hidden_dim);
    LabelEncoderParams p;
    p.w1.resize(h, d);
    p.w2.resize(d, h);
    for (Eigen::Index k = 0; k < p.w1.size(); ++k) {
        p.w1.data()[k] = scale * rng.normal();
    }
    for (Eigen::Index k = 0; k < p.w2.size(); ++k) {
        p.w2.data()[k] = scale * rng.normal();
    }
    p.b1 = Vector::Zero(h);
    p.b2 = Vector::Zero(d);
    return p;
}

RowMatrix encode_labels(const LabelEncoderParams& params, const RowMatrix& centroids) {
    if (static_cast<std::size_t>(centroids.cols()) != params.dim()) {
        throw DimensionError("centroid dim " + std::to_string(centroids.cols()) + " != encoder dim " +
                             std::to_string(params.dim()));
    }
    RowMatrix hidden = centroids * params.w1.transpose();
    hidden.rowwise() += params.b1.transpose();
    RowMatrix out = hidden * params.w2.transpose();
    out.rowwise() += params.b2.transpose();
    return out.cwiseMax(0.0);
}

std::vector<PositivePair> positive_pairs(const Corpus& corpus) {
    std::vector<PositivePair> pairs;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (const LabelId l : corpus.points[i].labels) {
            pairs.push_back({static_cast<std::uint32_t>(i), l});
        }
    }
    return pairs;
}

namespace {

void check_inputs(const LabelEncoderParams& params, const RowMatrix& centroids, const RowMatrix& features) {
    if (static_cast<std::size_t>(features.cols()) != params.dim() ||
        static_cast<std::size_t>(centroids.cols()) != params.dim()) {
        throw DimensionError("label encoder: feature/centroid dim does not match encoder dim " +
                             std::to_string(params.dim()));
    }
}

/// Distinct labels of a batch, in first-appearance order, plus the slot of each pair.
struct BatchLabels {
    std::vector<LabelId> labels;
    std::vector<Eigen::Index> slot_of_pair;
};

BatchLabels collect_labels(std::span<const PositivePair> pairs, std::size_t n_labels) {
    BatchLabels out;
    std::vector<Eigen::Index> slot(n_labels, -1);
    out.slot_of_pair.reserve(pairs.size());
    for (const auto& pair : pairs) {
        if (pair.label >= n_labels) {
            throw DimensionError("label " + std::to_string(pair.label) + " has no centroid");
        }
        if (slot[pair.label] < 0) {
            slot[pair.label] = static_cast<Eigen::Index>(out.labels.size());
            out.labels.push_back(pair.label);
        }
        out.slot_of_pair.push_back(slot[pair.label]);
    }
    return out;
}

}  // namespace

double pair_loss(const LabelEncoderParams& params, const RowMatrix& centroids, const RowMatrix& features,
                 std::span<const PositivePair> pairs, double normalizer) {
    check_inputs(params, centroids, features);
    const RowMatrix embeddings = encode_labels(params, centroids);
    double total = 0.0;
    for (const auto& pair : pairs) {
        const double d2 = (features.row(pair.point) - embeddings.row(pair.label)).squaredNorm();
        total += std::log1p(d2);
    }
    return total / normalizer;
}

double label_loss(const LabelEncoderParams& params, const RowMatrix& centroids, const RowMatrix& features,
                  const Corpus& corpus) {
    if (corpus.size() == 0) {
        throw Error("label loss is undefined on an empty corpus");
    }
    const auto pairs = positive_pairs(corpus);
    return pair_loss(params, centroids, features, pairs, static_cast<double>(corpus.size()));
}

double label_loss(const LabelEncoderParams& params, const RowMatrix& features, const Corpus& corpus) {
    return label_loss(params, compute_centroids(features, corpus).matrix, features, corpus);
}

LabelEncoderGradients label_loss_gradient(const LabelEncoderParams& params, const RowMatrix& centroids,
                                          const RowMatrix& features, std::span<const PositivePair> pairs,
                                          double normalizer) {
    check_inputs(params, centroids, features);
    const auto batch = collect_labels(pairs, static_cast<std::size_t>(centroids.rows()));
    const auto dim = static_cast<Eigen::Index>(params.dim());
    const auto width = static_cast<Eigen::Index>(batch.labels.size());

    Matrix mu(dim, width);
    for (Eigen::Index s = 0; s < width; ++s) {
        mu.col(s) = centroids.row(batch.labels[static_cast<std::size_t>(s)]).transpose();
    }
    Matrix hidden = params.w1 * mu;
    hidden.colwise() += params.b1;
    Matrix pre = params.w2 * hidden;
    pre.colwise() += params.b2;
    const Matrix out = pre.cwiseMax(0.0);

    LabelEncoderGradients g;
    Matrix grad_out = Matrix::Zero(dim, width);
    const double inv_norm = 1.0 / normalizer;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const Eigen::Index s = batch.slot_of_pair[k];
        const Vector residual = out.col(s) - features.row(pairs[k].point).transpose();
        const double d2 = residual.squaredNorm();
        g.loss += std::log1p(d2);
        grad_out.col(s) += (2.0 * inv_norm / (1.0 + d2)) * residual;
    }
    g.loss *= inv_norm;

    const Matrix grad_pre = grad_out.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    g.w2 = grad_pre * hidden.transpose();
    g.b2 = grad_pre.rowwise().sum();
    const Matrix grad_hidden = params.w2.transpose() * grad_pre;
    g.w1 = grad_hidden * mu.transpose();
    g.b1 = grad_hidden.rowwise().sum();
    return g;
}

LabelEncoderParams train_label_encoder(LabelEncoderParams params, const RowMatrix& centroids,
                                       const RowMatrix& features, const Corpus& corpus,
                                       const EncoderTrainConfig& config) {
    if (!(config.learning_rate > 0.0) || config.batch_size == 0) {
        throw Error("label encoder: learning_rate and batch_size must be positive");
    }
    params.validate();
    check_inputs(params, centroids, features);
    if (static_cast<std::size_t>(features.rows()) != corpus.size()) {
        throw DimensionError("label encoder: feature rows do not match corpus size");
    }
    auto pairs = positive_pairs(corpus);
    if (config.epochs == 0 || pairs.empty()) {
        return params;
    }

    const AdamConfig adam{config.learning_rate};
    AdamMoments m_w1(params.w1.rows(), params.w1.cols());
    AdamMoments m_b1(params.b1.size(), 1);
    AdamMoments m_w2(params.w2.rows(), params.w2.cols());
    AdamMoments m_b2(params.b2.size(), 1);
    std::int64_t step = 0;

    Rng rng(derive_seed(config.seed, "label_encoder/shuffle"));
    const auto normalizer = static_cast<double>(corpus.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<PositivePair>(pairs));
        for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, pairs.size() - start);
            const std::span<const PositivePair> batch(pairs.data() + start, len);
            const auto g = label_loss_gradient(params, centroids, features, batch, normalizer);
            if (!std::isfinite(g.loss)) {
                throw TrainingDiverged("label encoder: non-finite loss in epoch " + std::to_string(epoch + 1));
            }
            ++step;
            adam_update(params.w1, g.w1, m_w1, adam, step);
            adam_update(params.b1, g.b1, m_b1, adam, step);
            adam_update(params.w2, g.w2, m_w2, adam, step);
            adam_update(params.b2, g.b2, m_b2, adam, step);
        }
    }
    if (!params.w1.allFinite() || !params.w2.allFinite() || !params.b1.allFinite() || !params.b2.allFinite()) {
        throw TrainingDiverged("label encoder: parameters became non-finite");
    }
    return params;
}

LabelEncoderParams train_label_encoder(LabelEncoderParams params, const RowMatrix& features, const Corpus& corpus,
                                       const EncoderTrainConfig& config) {
    const auto centroids = compute_centroids(features, corpus);
    return train_label_encoder(std::move(params), centroids.matrix, features, corpus, config);
}

}  // namespace lightdxml
