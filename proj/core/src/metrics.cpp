#include "lightdxml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace lightdxml {
namespace {

void check_rows(std::span<const PredictionRow> predictions, const Truth& truth, std::size_t k) {
    if (k < 1) {
        throw std::invalid_argument("k must be >= 1");
    }
    if (predictions.size() != truth.size()) {
        throw std::invalid_argument("prediction rows (" + std::to_string(predictions.size()) + ") != truth rows (" +
                                    std::to_string(truth.size()) + ")");
    }
}

bool contains(const std::vector<LabelId>& sorted, LabelId label) {
    return std::binary_search(sorted.begin(), sorted.end(), label);
}

double inverse_propensity(const PropensityModel& model, LabelId label) {
    if (label >= model.p.size()) {
        throw std::invalid_argument("label " + std::to_string(label) + " has no propensity");
    }
    const double p = model.p[label];
    if (!(p > 0.0)) {
        throw std::invalid_argument("propensity of label " + std::to_string(label) + " is not positive");
    }
    return 1.0 / p;
}

}  // namespace

PropensityModel propensities(std::span<const std::uint64_t> frequency, std::size_t n_points, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("propensity constants must be positive");
    }
    PropensityModel model{a, b, {}};
    const double n = static_cast<double>(std::max<std::size_t>(n_points, 1));
    const double c = std::max(0.0, (std::log(n) - 1.0) * std::pow(b + 1.0, a));
    model.p.reserve(frequency.size());
    for (const auto f : frequency) {
        model.p.push_back(1.0 / (1.0 + c * std::exp(-a * std::log(static_cast<double>(f) + b))));
    }
    return model;
}

PropensityModel propensities(const LabelStats& stats, double a, double b) {
    const std::vector<std::uint64_t> freq(stats.frequency.begin(), stats.frequency.end());
    return propensities(freq, stats.n_points, a, b);
}

Truth truth_of(const Corpus& corpus) {
    Truth truth;
    truth.reserve(corpus.size());
    for (const auto& p : corpus.points) {
        truth.push_back(p.labels);
    }
    return truth;
}

double precision_at_k(std::span<const PredictionRow> predictions, const Truth& truth, std::size_t k) {
    check_rows(predictions, truth, k);
    double total = 0.0;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].empty()) {
            continue;
        }
        ++scored;
        const auto& row = predictions[i];
        std::size_t hits = 0;
        for (std::size_t r = 0; r < std::min(k, row.size()); ++r) {
            hits += contains(truth[i], row[r].label) ? 1 : 0;
        }
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return scored == 0 ? 0.0 : total / static_cast<double>(scored);
}

double psp_at_k(std::span<const PredictionRow> predictions, const Truth& truth, const PropensityModel& model,
                std::size_t k) {
    check_rows(predictions, truth, k);
    double total = 0.0;
    std::size_t scored = 0;
    std::vector<double> ideal;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].empty()) {
            continue;
        }
        ++scored;
        const auto& row = predictions[i];
        double gained = 0.0;
        for (std::size_t r = 0; r < std::min(k, row.size()); ++r) {
            if (contains(truth[i], row[r].label)) {
                gained += inverse_propensity(model, row[r].label);
            }
        }
        ideal.clear();
        for (const LabelId l : truth[i]) {
            ideal.push_back(inverse_propensity(model, l));
        }
        const std::size_t depth = std::min(k, ideal.size());
        std::partial_sort(ideal.begin(), ideal.begin() + static_cast<std::ptrdiff_t>(depth), ideal.end(),
                          std::greater<>());
        double best = 0.0;
        for (std::size_t r = 0; r < depth; ++r) {
            best += ideal[r];
        }
        total += gained / best;
    }
    return scored == 0 ? 0.0 : total / static_cast<double>(scored);
}

bool MetricReport::has_nan() const {
    const auto bad = [](double x) { return std::isnan(x); };
    return std::any_of(precision.begin(), precision.end(), bad) || std::any_of(psp.begin(), psp.end(), bad);
}

MetricReport evaluate(std::span<const PredictionRow> predictions, const Truth& truth, const PropensityModel& model) {
    MetricReport report;
    for (std::size_t j = 0; j < kReportKs.size(); ++j) {
        report.precision[j] = precision_at_k(predictions, truth, kReportKs[j]);
        report.psp[j] = psp_at_k(predictions, truth, model, kReportKs[j]);
    }
    for (const auto& t : truth) {
        (t.empty() ? report.skipped_points : report.scored_points) += 1;
    }
    return report;
}

std::string format_report(const MetricReport& report, bool with_timing) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-8s%10s%10s%10s\n", "metric", "@1", "@3", "@5");
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-8s%10.2f%10.2f%10.2f\n", "P", 100.0 * report.precision[0],
                  100.0 * report.precision[1], 100.0 * report.precision[2]);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-8s%10.2f%10.2f%10.2f\n", "PSP", 100.0 * report.psp[0], 100.0 * report.psp[1],
                  100.0 * report.psp[2]);
    out += buf;
    std::snprintf(buf, sizeof(buf), "scored points: %zu, skipped (no labels): %zu\n", report.scored_points,
                  report.skipped_points);
    out += buf;
    if (with_timing) {
        std::snprintf(buf, sizeof(buf), "train seconds: %.3f\npredict ms/point: %.4f\n", report.train_seconds,
                      report.predict_ms_per_point);
        out += buf;
    }
    return out;
}

std::string report_csv(const MetricReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu\n", report.precision[0],
                  report.precision[1], report.precision[2], report.psp[0], report.psp[1], report.psp[2],
                  report.scored_points, report.skipped_points);
    return std::string("p1,p3,p5,psp1,psp3,psp5,scored,skipped\n") + buf;
}

std::vector<SweepRow> sweep_beta(const ModelBundle& bundle, const RowMatrix& dense, const Truth& truth,
                                 const PropensityModel& model, std::span<const double> values,
                                 const PredictConfig& base) {
    if (values.empty()) {
        throw std::invalid_argument("sweep needs at least one value");
    }
    base.validate();
    if (static_cast<std::size_t>(dense.rows()) != truth.size()) {
        throw std::invalid_argument("sweep: feature rows != truth rows");
    }
    const auto n = static_cast<std::ptrdiff_t>(dense.rows());
    std::vector<std::vector<Candidate>> candidates(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Vector x = dense.row(i).transpose();
        candidates[static_cast<std::size_t>(i)] = shortlist_candidates(bundle, x, base);
    }
    std::vector<SweepRow> rows;
    std::vector<PredictionRow> predictions(candidates.size());
    for (const double beta : values) {
        if (!(beta >= 0.0 && beta <= 1.0)) {
            throw std::invalid_argument("beta values must lie in [0, 1]");
        }
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            predictions[i] = rank_candidates(candidates[i], beta, 1);
        }
        rows.push_back({beta, precision_at_k(predictions, truth, 1), psp_at_k(predictions, truth, model, 1)});
    }
    return rows;
}

std::string sweep_csv(const std::string& parameter, std::span<const SweepRow> rows) {
    std::string out = parameter + ",p1,psp1\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%g,%.6f,%.6f\n", r.value, r.p1, r.psp1);
        out += buf;
    }
    return out;
}

}  // namespace lightdxml
