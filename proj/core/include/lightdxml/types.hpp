#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lightdxml {

using LabelId = std::uint32_t;
using FeatureId = std::uint32_t;

/// Dense row-per-item matrix (points x dim, labels x dim).
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ScoredLabel {
    LabelId label = 0;
    double score = 0.0;

    friend bool operator==(const ScoredLabel&, const ScoredLabel&) = default;
};

/// Ranking order used everywhere: higher score first, lower label index on ties.
inline bool ranks_before(const ScoredLabel& a, const ScoredLabel& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.label < b.label;
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Raised when a training loss becomes NaN or infinite.
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

}  // namespace lightdxml
