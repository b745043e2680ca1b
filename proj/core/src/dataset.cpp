#include "lightdxml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "lightdxml/rng.hpp"

namespace lightdxml {

DatasetError::DatasetError(const std::string& message, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

SparseVector SparseVector::from_entries(std::vector<SparseEntry> entries, std::size_t* merged) {
    for (const auto& e : entries) {
        if (!std::isfinite(e.weight)) {
            throw DatasetError("non-finite weight for feature " + std::to_string(e.index), 0);
        }
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
    SparseVector result;
    result.entries_.reserve(entries.size());
    for (const auto& e : entries) {
        if (!result.entries_.empty() && result.entries_.back().index == e.index) {
            result.entries_.back().weight += e.weight;
            if (merged != nullptr) {
                ++*merged;
            }
        } else {
            result.entries_.push_back(e);
        }
    }
    std::erase_if(result.entries_, [](const SparseEntry& e) { return e.weight == 0.0; });
    return result;
}

void Corpus::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        FeatureId prev_feature = 0;
        bool first = true;
        for (const auto& e : p.features.entries()) {
            if (e.index >= n_features) {
                throw DatasetError("point " + std::to_string(i) + ": feature index " + std::to_string(e.index) +
                                       " >= V=" + std::to_string(n_features),
                                   0);
            }
            if (!first && e.index <= prev_feature) {
                throw DatasetError("point " + std::to_string(i) + ": feature indices not strictly increasing", 0);
            }
            if (!std::isfinite(e.weight) || e.weight == 0.0) {
                throw DatasetError("point " + std::to_string(i) + ": zero or non-finite weight", 0);
            }
            prev_feature = e.index;
            first = false;
        }
        for (std::size_t k = 0; k < p.labels.size(); ++k) {
            if (p.labels[k] >= n_labels) {
                throw DatasetError("point " + std::to_string(i) + ": label " + std::to_string(p.labels[k]) +
                                       " >= L=" + std::to_string(n_labels),
                                   0);
            }
            if (k > 0 && p.labels[k] <= p.labels[k - 1]) {
                throw DatasetError("point " + std::to_string(i) + ": labels not sorted and distinct", 0);
            }
        }
    }
}

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
}

std::vector<std::string_view> tokenize(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !is_space(line[i])) {
            ++i;
        }
        if (i > start) {
            tokens.push_back(line.substr(start, i - start));
        }
    }
    return tokens;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    if (text.empty()) {
        return false;
    }
    if constexpr (std::is_floating_point_v<T>) {
        // from_chars rejects a leading '+', which some writers emit.
        if (text.front() == '+') {
            text.remove_prefix(1);
        }
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size();
}

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), is_space);
}

DataPoint parse_point(std::string_view line, std::size_t line_no, const Corpus& shape, ParseReport& report) {
    DataPoint point;
    const auto tokens = tokenize(line);
    std::size_t first_feature = 0;
    if (!tokens.empty() && tokens.front().find(':') == std::string_view::npos) {
        first_feature = 1;
        std::string_view list = tokens.front();
        while (true) {
            const auto comma = list.find(',');
            const auto item = list.substr(0, comma);
            std::uint64_t label = 0;
            if (!parse_number(item, label)) {
                throw DatasetError("malformed label '" + std::string(item) + "'", line_no);
            }
            if (label >= shape.n_labels) {
                throw DatasetError("label index " + std::to_string(label) + " >= L=" + std::to_string(shape.n_labels),
                                   line_no);
            }
            point.labels.push_back(static_cast<LabelId>(label));
            if (comma == std::string_view::npos) {
                break;
            }
            list.remove_prefix(comma + 1);
        }
        std::sort(point.labels.begin(), point.labels.end());
        const auto last = std::unique(point.labels.begin(), point.labels.end());
        report.duplicate_labels += static_cast<std::size_t>(point.labels.end() - last);
        point.labels.erase(last, point.labels.end());
    }

    std::vector<SparseEntry> entries;
    entries.reserve(tokens.size() - first_feature);
    for (std::size_t t = first_feature; t < tokens.size(); ++t) {
        const auto token = tokens[t];
        const auto colon = token.find(':');
        if (colon == std::string_view::npos) {
            throw DatasetError("expected idx:val, got '" + std::string(token) + "'", line_no);
        }
        std::uint64_t index = 0;
        double weight = 0.0;
        if (!parse_number(token.substr(0, colon), index) || !parse_number(token.substr(colon + 1), weight)) {
            throw DatasetError("malformed feature '" + std::string(token) + "'", line_no);
        }
        if (index >= shape.n_features) {
            throw DatasetError("feature index " + std::to_string(index) + " >= V=" + std::to_string(shape.n_features),
                               line_no);
        }
        if (!std::isfinite(weight)) {
            throw DatasetError("non-finite weight in '" + std::string(token) + "'", line_no);
        }
        entries.push_back({static_cast<FeatureId>(index), weight});
    }
    point.features = SparseVector::from_entries(std::move(entries), &report.merged_duplicate_features);
    return point;
}

void write_double(std::ostream& out, double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    out.write(buffer, result.ptr - buffer);
}

}  // namespace

ParsedCorpus parse_corpus(std::istream& in) {
    ParsedCorpus parsed;
    Corpus& corpus = parsed.corpus;

    std::string line;
    if (!std::getline(in, line)) {
        throw DatasetError("missing header 'N V L'", 1);
    }
    const auto header = tokenize(line);
    std::uint64_t n = 0;
    std::uint64_t v = 0;
    std::uint64_t l = 0;
    if (header.size() != 3 || !parse_number(header[0], n) || !parse_number(header[1], v) ||
        !parse_number(header[2], l)) {
        throw DatasetError("malformed header '" + line + "', expected 'N V L'", 1);
    }
    corpus.n_features = v;
    corpus.n_labels = l;
    corpus.points.reserve(n);

    std::vector<std::string> body;
    while (std::getline(in, line)) {
        body.push_back(std::move(line));
    }
    while (!body.empty() && is_blank(body.back())) {
        body.pop_back();
    }
    if (body.size() != n) {
        const std::size_t at = body.size() > n ? n + 2 : body.size() + 2;
        throw DatasetError("header declares " + std::to_string(n) + " points but file has " +
                               std::to_string(body.size()),
                           at);
    }
    for (std::size_t i = 0; i < body.size(); ++i) {
        corpus.points.push_back(parse_point(body[i], i + 2, corpus, parsed.report));
    }
    return parsed;
}

ParsedCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError("cannot open corpus file '" + path.string() + "'", 0);
    }
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    out << corpus.size() << ' ' << corpus.n_features << ' ' << corpus.n_labels << '\n';
    for (const auto& p : corpus.points) {
        for (std::size_t k = 0; k < p.labels.size(); ++k) {
            if (k > 0) {
                out << ',';
            }
            out << p.labels[k];
        }
        for (const auto& e : p.features.entries()) {
            out << ' ' << e.index << ':';
            write_double(out, e.weight);
        }
        out << '\n';
    }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DatasetError("cannot write corpus file '" + path.string() + "'", 0);
    }
    write_corpus(out, corpus);
}

std::size_t LabelStats::total_assignments() const {
    return std::accumulate(frequency.begin(), frequency.end(), std::size_t{0});
}

LabelStats label_stats(const Corpus& corpus) {
    LabelStats stats;
    stats.frequency.assign(corpus.n_labels, 0);
    stats.n_points = corpus.size();
    for (const auto& p : corpus.points) {
        for (const LabelId l : p.labels) {
            ++stats.frequency[l];
        }
    }
    return stats;
}

std::size_t count_unlabeled(const Corpus& corpus) {
    return static_cast<std::size_t>(
        std::count_if(corpus.points.begin(), corpus.points.end(), [](const DataPoint& p) { return p.labels.empty(); }));
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
    if (config.n_points == 0 || config.n_labels == 0 || config.dim == 0) {
        throw DatasetError("synthetic corpus needs n_points, n_labels and dim >= 1", 0);
    }
    if (config.n_features < config.dim) {
        throw DatasetError("synthetic corpus needs n_features >= dim", 0);
    }
    if (config.min_labels_per_point == 0 || config.min_labels_per_point > config.max_labels_per_point) {
        throw DatasetError("synthetic corpus needs 1 <= min_labels_per_point <= max_labels_per_point", 0);
    }
    if (!(config.zipf_exponent >= 0.0) || !(config.noise >= 0.0)) {
        throw DatasetError("synthetic corpus needs zipf_exponent >= 0 and noise >= 0", 0);
    }
    if (!(config.label_decay > 0.0 && config.label_decay <= 1.0)) {
        throw DatasetError("synthetic corpus needs 0 < label_decay <= 1", 0);
    }

    const std::size_t n_labels = config.n_labels;
    const std::size_t dim = config.dim;
    Rng rng(derive_seed(config.seed, "synthetic"));

    // Sparse nonnegative planted vectors keep labels nearly orthogonal and
    // reachable by a ReLU encoder.
    const std::size_t support = std::clamp<std::size_t>(dim / 8, std::min<std::size_t>(2, dim), dim);
    RowMatrix raw_planted = RowMatrix::Zero(static_cast<Eigen::Index>(n_labels), static_cast<Eigen::Index>(dim));
    std::vector<std::size_t> dims(dim);
    for (std::size_t l = 0; l < n_labels; ++l) {
        std::iota(dims.begin(), dims.end(), std::size_t{0});
        for (std::size_t s = 0; s < support; ++s) {
            const std::size_t pick = s + rng.below(dim - s);
            std::swap(dims[s], dims[pick]);
            raw_planted(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(dims[s])) =
                0.25 + std::abs(rng.normal());
        }
        raw_planted.row(static_cast<Eigen::Index>(l)).normalize();
    }

    std::vector<double> cdf(n_labels);
    double total = 0.0;
    for (std::size_t r = 0; r < n_labels; ++r) {
        total += std::pow(static_cast<double>(r + 1), -config.zipf_exponent);
        cdf[r] = total;
    }
    auto draw_label = [&]() {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return static_cast<LabelId>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n_labels - 1));
    };

    const std::size_t max_count = std::min(config.max_labels_per_point, n_labels);
    const std::size_t min_count = std::min(config.min_labels_per_point, max_count);
    std::vector<std::vector<LabelId>> raw_labels(config.n_points);
    std::vector<std::size_t> counts(n_labels, 0);
    for (auto& labels : raw_labels) {
        const std::size_t count = min_count + rng.below(max_count - min_count + 1);
        while (labels.size() < count) {
            const LabelId l = draw_label();
            if (std::find(labels.begin(), labels.end(), l) == labels.end()) {
                labels.push_back(l);
                ++counts[l];
            }
        }
    }

    // Renumber so that label id order is frequency order (ties keep draw rank).
    std::vector<LabelId> by_frequency(n_labels);
    std::iota(by_frequency.begin(), by_frequency.end(), LabelId{0});
    std::stable_sort(by_frequency.begin(), by_frequency.end(),
                     [&](LabelId a, LabelId b) { return counts[a] > counts[b]; });
    std::vector<LabelId> new_id(n_labels);
    SyntheticCorpus result;
    result.planted.resize(static_cast<Eigen::Index>(n_labels), static_cast<Eigen::Index>(dim));
    for (std::size_t rank = 0; rank < n_labels; ++rank) {
        new_id[by_frequency[rank]] = static_cast<LabelId>(rank);
        result.planted.row(static_cast<Eigen::Index>(rank)) = raw_planted.row(by_frequency[rank]);
    }

    Corpus& corpus = result.corpus;
    corpus.n_features = config.n_features;
    corpus.n_labels = n_labels;
    corpus.points.reserve(config.n_points);
    const double noise_scale = config.noise / std::sqrt(static_cast<double>(dim));
    Vector dense(static_cast<Eigen::Index>(dim));
    for (const auto& labels : raw_labels) {
        DataPoint point;
        for (const LabelId l : labels) {
            point.labels.push_back(new_id[l]);
        }
        std::sort(point.labels.begin(), point.labels.end());

        dense.setZero();
        double weight = 1.0;
        double weight_sum = 0.0;
        for (std::size_t j = 0; j < point.labels.size(); ++j) {
            const LabelId l = point.labels[point.labels.size() - 1 - j];
            dense += weight * result.planted.row(l).transpose();
            weight_sum += weight;
            weight *= config.label_decay;
        }
        dense /= weight_sum;
        if (config.noise > 0.0) {
            for (Eigen::Index d = 0; d < dense.size(); ++d) {
                dense[d] += noise_scale * rng.normal();
            }
        }

        std::vector<SparseEntry> entries;
        for (Eigen::Index d = 0; d < dense.size(); ++d) {
            if (dense[d] != 0.0) {
                entries.push_back({static_cast<FeatureId>(d), dense[d]});
            }
        }
        point.features = SparseVector::from_entries(std::move(entries));
        corpus.points.push_back(std::move(point));
    }
    return result;
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double validation_fraction, std::uint64_t seed) {
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw DatasetError("validation fraction must lie in [0, 1)", 0);
    }
    const std::size_t n = corpus.size();
    const auto n_validation = static_cast<std::size_t>(std::floor(static_cast<double>(n) * validation_fraction));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<bool> in_validation(n, false);
    for (std::size_t k = 0; k < n_validation; ++k) {
        in_validation[order[k]] = true;
    }

    Corpus train{corpus.n_features, corpus.n_labels, {}};
    Corpus validation{corpus.n_features, corpus.n_labels, {}};
    train.points.reserve(n - n_validation);
    validation.points.reserve(n_validation);
    for (std::size_t i = 0; i < n; ++i) {
        (in_validation[i] ? validation : train).points.push_back(corpus.points[i]);
    }
    return {std::move(train), std::move(validation)};
}

}  // namespace lightdxml
