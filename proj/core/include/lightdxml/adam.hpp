#pragma once

#include <cstddef>
#include <cstdint>

#include "lightdxml/types.hpp"

namespace lightdxml {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First and second moment buffers for one parameter block.
struct AdamMoments {
    Matrix m;
    Matrix v;

    AdamMoments() = default;
    AdamMoments(Eigen::Index rows, Eigen::Index cols) : m(Matrix::Zero(rows, cols)), v(Matrix::Zero(rows, cols)) {}
};

/// Bias-corrected Adam step on `count` contiguous entries. `step` is 1-based.
void adam_update(double* param, const double* grad, double* m, double* v, std::size_t count, const AdamConfig& config,
                 std::int64_t step);

/// Whole-block update; `grad` must have the shape of `param`.
template <typename Param, typename Grad>
void adam_update(Param& param, const Grad& grad, AdamMoments& moments, const AdamConfig& config, std::int64_t step) {
    adam_update(param.data(), grad.data(), moments.m.data(), moments.v.data(), static_cast<std::size_t>(param.size()),
                config, step);
}

}  // namespace lightdxml
