#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "lightdxml/types.hpp"

namespace lightdxml {

/// Parse or validation failure. `line()` is 1-based, 0 when not tied to a line.
class DatasetError : public Error {
public:
    DatasetError(const std::string& message, std::size_t line);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct SparseEntry {
    FeatureId index = 0;
    double weight = 0.0;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Bag-of-words row: indices strictly increasing, weights finite and nonzero.
class SparseVector {
public:
    SparseVector() = default;

    /// Sorts by index, sums duplicate indices and drops zero weights.
    /// `merged` (if given) is incremented once per duplicate entry folded away.
    /// Throws DatasetError on a non-finite weight.
    static SparseVector from_entries(std::vector<SparseEntry> entries, std::size_t* merged = nullptr);

    std::span<const SparseEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    friend bool operator==(const SparseVector&, const SparseVector&) = default;

private:
    std::vector<SparseEntry> entries_;
};

struct DataPoint {
    SparseVector features;
    /// Sorted, distinct.
    std::vector<LabelId> labels;

    friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

struct Corpus {
    std::size_t n_features = 0;
    std::size_t n_labels = 0;
    std::vector<DataPoint> points;

    std::size_t size() const noexcept { return points.size(); }

    /// Throws DatasetError if any index is out of range or a label list is unsorted.
    void validate() const;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct ParseReport {
    std::size_t merged_duplicate_features = 0;
    std::size_t duplicate_labels = 0;
};

struct ParsedCorpus {
    Corpus corpus;
    ParseReport report;
};

/// Reads the extreme-classification text format:
///
///     N V L
///     l1,l2,... idx:val idx:val ...
///
/// One line per point. The label list may be empty, in which case the line starts
/// with whitespace or directly with a feature. LF and CRLF are both accepted and
/// trailing blank lines are ignored.
ParsedCorpus parse_corpus(std::istream& in);
ParsedCorpus load_corpus(const std::filesystem::path& path);

/// Writes the format read by parse_corpus. Weights use the shortest decimal form
/// that round-trips exactly.
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct LabelStats {
    std::vector<std::size_t> frequency;
    std::size_t n_points = 0;

    std::size_t total_assignments() const;
};

LabelStats label_stats(const Corpus& corpus);

/// Number of points without any positive label.
std::size_t count_unlabeled(const Corpus& corpus);

struct SyntheticConfig {
    std::size_t n_points = 2000;
    std::size_t n_labels = 100;
    std::size_t n_features = 64;
    std::size_t dim = 64;
    double zipf_exponent = 1.1;
    double noise = 0.05;
    std::uint64_t seed = 7;
    std::size_t min_labels_per_point = 1;
    std::size_t max_labels_per_point = 5;
    /// Weight ratio between consecutive labels of a point, rarest first. 1 is a plain mean.
    double label_decay = 1.0;
};

struct SyntheticCorpus {
    Corpus corpus;
    /// n_labels x dim, nonnegative rows of unit norm.
    RowMatrix planted;
};

/// Draws a corpus whose dense features (under identity_embedding_table) are noisy
/// means of planted label vectors.
///
/// Labels are drawn from a Zipf law and then renumbered so that label 0 is the most
/// frequent. With label_decay < 1 the mean is weighted geometrically starting from the
/// point's least frequent label.
SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

/// Uniformly samples floor(N * validation_fraction) points into the second corpus.
/// Both halves keep the original relative point order.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double validation_fraction, std::uint64_t seed);

}  // namespace lightdxml
