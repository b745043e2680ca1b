#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lightdxml/dataset.hpp"
#include "lightdxml/types.hpp"

namespace lightdxml {

/// Two stacked affine layers with a ReLU on the output only:
///
///     y_j = ReLU(W2 (W1 mu_j + b1) + b2)
///
/// There is deliberately no activation between the layers, so the map is
/// equivalent to ReLU(W mu_j + b) with W = W2 W1 and b = W2 b1 + b2.
struct LabelEncoderParams {
    Matrix w1;  ///< hidden x dim
    Vector b1;  ///< hidden
    Matrix w2;  ///< dim x hidden
    Vector b2;  ///< dim

    std::size_t dim() const noexcept { return static_cast<std::size_t>(w1.cols()); }
    std::size_t hidden_dim() const noexcept { return static_cast<std::size_t>(w1.rows()); }

    /// Throws DimensionError on inconsistent shapes or non-finite entries.
    void validate() const;

    friend bool operator==(const LabelEncoderParams& a, const LabelEncoderParams& b) {
        return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
    }
};

/// Weights ~ N(0, 1/dim), biases zero.
LabelEncoderParams init_label_encoder(std::size_t dim, std::size_t hidden_dim, std::uint64_t seed);

/// Forward pass for every centroid row. Output is L x dim and elementwise >= 0.
RowMatrix encode_labels(const LabelEncoderParams& params, const RowMatrix& centroids);

struct PositivePair {
    std::uint32_t point = 0;
    LabelId label = 0;
};

/// All (point, positive label) pairs in point order.
std::vector<PositivePair> positive_pairs(const Corpus& corpus);

/// (1/N) * sum over positive pairs of log(1 + ||x_i - y_j||^2).
double label_loss(const LabelEncoderParams& params, const RowMatrix& centroids, const RowMatrix& features,
                  const Corpus& corpus);

/// Same, with centroids computed from `features`.
double label_loss(const LabelEncoderParams& params, const RowMatrix& features, const Corpus& corpus);

/// (1/normalizer) * sum over `pairs` of log(1 + ||x_i - y_j||^2).
double pair_loss(const LabelEncoderParams& params, const RowMatrix& centroids, const RowMatrix& features,
                 std::span<const PositivePair> pairs, double normalizer);

struct LabelEncoderGradients {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
    double loss = 0.0;  ///< pair_loss value at the same point
};

/// Gradient of pair_loss with respect to all four parameter blocks. Centroids are
/// treated as constants. The ReLU derivative at exactly 0 is taken as 0.
LabelEncoderGradients label_loss_gradient(const LabelEncoderParams& params, const RowMatrix& centroids,
                                          const RowMatrix& features, std::span<const PositivePair> pairs,
                                          double normalizer);

struct EncoderTrainConfig {
    double learning_rate = 0.006;
    std::size_t epochs = 8;
    /// Positive pairs per mini-batch.
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
};

/// Mini-batch Adam over shuffled positive pairs, with fresh optimizer state.
/// Throws TrainingDiverged if a batch loss stops being finite.
LabelEncoderParams train_label_encoder(LabelEncoderParams params, const RowMatrix& centroids,
                                       const RowMatrix& features, const Corpus& corpus,
                                       const EncoderTrainConfig& config);

LabelEncoderParams train_label_encoder(LabelEncoderParams params, const RowMatrix& features, const Corpus& corpus,
                                       const EncoderTrainConfig& config);

}  // namespace lightdxml
