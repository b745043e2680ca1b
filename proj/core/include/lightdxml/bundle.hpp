#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lightdxml/classifier.hpp"
#include "lightdxml/config.hpp"
#include "lightdxml/features.hpp"
#include "lightdxml/hnsw.hpp"
#include "lightdxml/label_encoder.hpp"

namespace lightdxml {

inline constexpr std::uint32_t kBundleVersion = 1;

/// State at the end of one training cycle (one encoder retraining plus the
/// classifier epochs that used its shortlists).
struct CycleRecord {
    std::uint64_t cycle = 0;
    /// Classifier epochs completed when the record was taken.
    std::uint64_t classifier_epochs_done = 0;
    /// Number of encoder trainings so far.
    std::uint64_t encoder_version = 0;
    /// Encoder version the current shortlists were built from.
    std::uint64_t shortlist_encoder_version = 0;
    double encoder_loss = 0.0;
    double classifier_loss = 0.0;
    double val_p1 = 0.0;
    double val_psp1 = 0.0;

    friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct EpochRecord {
    /// 1-based classifier epoch.
    std::uint64_t epoch = 0;
    std::uint64_t shortlist_encoder_version = 0;
    double loss = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingLog {
    std::vector<CycleRecord> cycles;
    std::vector<EpochRecord> epochs;
    std::uint64_t classifier_epochs = 0;
    std::uint64_t encoder_epochs = 0;
    std::uint64_t encoder_trainings = 0;
    std::uint64_t shortlist_builds = 0;
    /// Index into `cycles` of the checkpoint this bundle holds.
    std::uint64_t best_cycle = 0;

    friend bool operator==(const TrainingLog&, const TrainingLog&) = default;
};

/// Everything needed to predict: embedding table, label encoder, feature transform,
/// classifier, and the label index, plus the config and training log.
struct ModelBundle {
    TrainConfig config;
    EmbeddingTable embeddings;
    LabelEncoderParams encoder;
    ClassifierModel model;
    AnnIndex index;
    /// Label frequencies of the training corpus (for propensities).
    std::vector<std::uint64_t> label_frequency;
    std::uint64_t n_train_points = 0;
    TrainingLog log;

    std::size_t n_labels() const noexcept { return model.clf.n_labels(); }
    std::size_t dim() const noexcept { return model.transform.dim(); }
    std::size_t vocab_size() const noexcept { return embeddings.vocab_size(); }
    bool trained() const noexcept { return n_labels() > 0 && !index.empty(); }

    /// Throws DimensionError if component shapes disagree.
    void validate() const;

    friend bool operator==(const ModelBundle& a, const ModelBundle& b) {
        return a.config == b.config && a.embeddings.rows == b.embeddings.rows && a.encoder == b.encoder &&
               a.model == b.model && a.index == b.index && a.label_frequency == b.label_frequency &&
               a.n_train_points == b.n_train_points && a.log == b.log;
    }
};

/// Magic, version, tagged length-prefixed sections, trailing CRC-32. Little-endian.
std::vector<std::byte> serialize_bundle(const ModelBundle& bundle);
/// Throws BundleError; never returns a partially decoded bundle.
ModelBundle deserialize_bundle(std::span<const std::byte> bytes);

/// Writes to a temporary file and renames it into place.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace lightdxml
