#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lightdxml/dataset.hpp"
#include "lightdxml/inference.hpp"

namespace lightdxml {

/// Per-label propensities p_l = 1 / (1 + C (N_l + B)^-A), C = (ln N - 1)(B + 1)^A.
/// C is clamped at 0, so for N < e every p_l is 1.
struct PropensityModel {
    double a = 0.55;
    double b = 1.5;
    std::vector<double> p;
};

PropensityModel propensities(const LabelStats& stats, double a = 0.55, double b = 1.5);
PropensityModel propensities(std::span<const std::uint64_t> frequency, std::size_t n_points, double a = 0.55,
                             double b = 1.5);

/// Sorted positive labels per point.
using Truth = std::vector<std::vector<LabelId>>;
Truth truth_of(const Corpus& corpus);

/// Mean over points with at least one positive of |top-k ∩ positives| / k.
/// Throws std::invalid_argument for k < 1 or a row-count mismatch.
double precision_at_k(std::span<const PredictionRow> predictions, const Truth& truth, std::size_t k);

/// Mean over points with positives of
///   sum_{l in top-k, l positive} 1/p_l  /  sum of the min(k, |P|) largest 1/p_l over positives.
/// Throws std::invalid_argument on a non-positive propensity used by the sum.
double psp_at_k(std::span<const PredictionRow> predictions, const Truth& truth, const PropensityModel& model,
                std::size_t k);

inline constexpr std::array<std::size_t, 3> kReportKs = {1, 3, 5};

struct MetricReport {
    std::array<double, 3> precision{};  ///< @1, @3, @5
    std::array<double, 3> psp{};
    std::size_t scored_points = 0;
    std::size_t skipped_points = 0;
    double train_seconds = 0.0;
    double predict_ms_per_point = 0.0;

    bool has_nan() const;
};

MetricReport evaluate(std::span<const PredictionRow> predictions, const Truth& truth, const PropensityModel& model);

/// Fixed-width table (values x100). Timings are printed only when `with_timing`.
std::string format_report(const MetricReport& report, bool with_timing);
/// Header plus one row: p1,p3,p5,psp1,psp3,psp5,scored,skipped (values in [0,1]).
std::string report_csv(const MetricReport& report);

struct SweepRow {
    double value = 0.0;
    double p1 = 0.0;
    double psp1 = 0.0;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Evaluates every beta over one set of shortlists. Throws std::invalid_argument
/// when `values` is empty.
std::vector<SweepRow> sweep_beta(const ModelBundle& bundle, const RowMatrix& dense, const Truth& truth,
                                 const PropensityModel& model, std::span<const double> values,
                                 const PredictConfig& base);

std::string sweep_csv(const std::string& parameter, std::span<const SweepRow> rows);

}  // namespace lightdxml
