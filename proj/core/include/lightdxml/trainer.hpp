#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "lightdxml/bundle.hpp"
#include "lightdxml/dataset.hpp"

namespace lightdxml {

struct TrainSchedule {
    /// Classifier epochs in total.
    std::size_t e_model = 16;
    /// Encoder epochs per retraining.
    std::size_t e_label = 8;
    /// Classifier epochs between encoder retrainings.
    std::size_t e_hat_label = 8;

    static TrainSchedule from(const TrainConfig& config);
    /// Throws ConfigError when e_model > 0 and e_hat_label == 0.
    void validate() const;
};

/// floor(e_model / e_hat_label) + 1: one initial training plus one per period.
std::size_t encoder_trainings(const TrainSchedule& schedule);

/// e_model + e_label * (floor(e_model / e_hat_label) + 1).
std::size_t total_epochs(const TrainSchedule& schedule);

struct TrainOptions {
    /// Held-out corpus. When null, `validation_fraction` of the training corpus is
    /// split off; with a fraction of 0 the training corpus itself is scored.
    const Corpus* validation = nullptr;
    /// Word embeddings. When null, a seeded random table of `embedding_dim` columns is used.
    const EmbeddingTable* embeddings = nullptr;
    /// Receives one line per stage.
    std::function<void(const std::string&)> progress;
};

/// Runs the cyclic schedule:
///   embed points; train the encoder on centroids of the transformed features;
///   build the label index and shortlists; then for t = 1..e_model train the
///   classifier one epoch and, whenever t is a multiple of e_hat_label, retrain the
///   encoder and rebuild index and shortlists.
/// Validation P@1 is recorded after each retraining and after the last epoch; the
/// returned bundle is the earliest checkpoint with the highest P@1 and carries the
/// full log. Stage failures are rethrown with the stage name prefixed.
ModelBundle run_training(const Corpus& corpus, const TrainConfig& config, const TrainOptions& options = {});

}  // namespace lightdxml
