#include "lightdxml/trainer.hpp"

#include <cstdio>
#include <optional>
#include <utility>

#include "lightdxml/features.hpp"
#include "lightdxml/inference.hpp"
#include "lightdxml/metrics.hpp"
#include "lightdxml/rng.hpp"
#include "lightdxml/shortlist.hpp"

namespace lightdxml {

TrainSchedule TrainSchedule::from(const TrainConfig& config) {
    return {config.e_model, config.e_label, config.e_hat_label};
}

void TrainSchedule::validate() const {
    if (e_model > 0 && e_hat_label == 0) {
        throw ConfigError("e_hat_label must be >= 1 when e_model > 0");
    }
}

std::size_t encoder_trainings(const TrainSchedule& s) {
    s.validate();
    return (s.e_hat_label == 0 ? 0 : s.e_model / s.e_hat_label) + 1;
}

std::size_t total_epochs(const TrainSchedule& s) {
    return s.e_model + s.e_label * encoder_trainings(s);
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const TrainingDiverged& e) {
        throw TrainingDiverged(name + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(name + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const Error& e) {
        throw Error(name + ": " + e.what());
    }
}

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

class Trainer {
public:
    Trainer(const Corpus& corpus, const TrainConfig& config, const TrainOptions& options)
        : config_(config), schedule_(TrainSchedule::from(config)), options_(options) {
        validate(config_);
        schedule_.validate();
        corpus.validate();

        if (options.validation != nullptr) {
            train_ = &corpus;
            validation_ = options.validation;
        } else if (config.validation_fraction > 0.0) {
            auto parts = split(corpus, config.validation_fraction, derive_seed(config.seed, "split"));
            owned_train_ = std::move(parts.first);
            owned_validation_ = std::move(parts.second);
            train_ = &*owned_train_;
            validation_ = &*owned_validation_;
        } else {
            train_ = &corpus;
            validation_ = &corpus;
        }
        if (train_->size() == 0) {
            throw Error("training corpus is empty");
        }
        if (validation_->n_labels != train_->n_labels || validation_->n_features != train_->n_features) {
            throw DimensionError("validation corpus dimensions differ from training corpus");
        }
    }

    ModelBundle run() {
        setup();
        retrain();
        if (schedule_.e_model == 0) {
            record_cycle(0, 0.0);
        }
        for (std::size_t t = 1; t <= schedule_.e_model; ++t) {
            const double loss = classifier_epoch(t);
            const bool retrain_now = t % schedule_.e_hat_label == 0;
            if (retrain_now) {
                retrain();
            }
            if (retrain_now || t == schedule_.e_model) {
                record_cycle(t, loss);
            }
        }
        ModelBundle result = std::move(*best_);
        result.log = log_;
        result.log.best_cycle = best_index_;
        return result;
    }

private:
    void say(const std::string& line) const {
        if (options_.progress) {
            options_.progress(line);
        }
    }

    void setup() {
        auto& bundle = working_;
        if (options_.embeddings != nullptr) {
            if (options_.embeddings->vocab_size() != train_->n_features) {
                throw DimensionError("embedding table has " + std::to_string(options_.embeddings->vocab_size()) +
                                     " rows, corpus has V=" + std::to_string(train_->n_features));
            }
            bundle.embeddings = *options_.embeddings;
        } else {
            bundle.embeddings = random_embedding_table(train_->n_features, config_.embedding_dim,
                                                       derive_seed(config_.seed, "embeddings"));
        }
        config_.embedding_dim = bundle.embeddings.dim();
        bundle.config = config_;

        const std::size_t dim = bundle.embeddings.dim();
        const std::size_t hidden = config_.hidden_dim > 0 ? config_.hidden_dim : dim;
        stage("embed", [&] {
            features_ = embed_points(*train_, bundle.embeddings, config_.normalize_features).matrix;
            validation_features_ = embed_points(*validation_, bundle.embeddings, config_.normalize_features).matrix;
            return 0;
        });
        bundle.model = ClassifierModel::initial(dim, train_->n_labels, config_.use_bias);
        bundle.encoder = init_label_encoder(dim, hidden, derive_seed(config_.seed, "encoder/init"));
        optimizer_ = ClassifierOptimizer(bundle.model);

        const auto stats = label_stats(*train_);
        bundle.label_frequency.assign(stats.frequency.begin(), stats.frequency.end());
        bundle.n_train_points = train_->size();
        propensity_ = propensities(bundle.label_frequency, train_->size(), config_.propensity_a, config_.propensity_b);
        truth_ = truth_of(*validation_);
        say(fmt("train points %zu, validation points %zu, labels %zu, dim %zu", train_->size(), validation_->size(),
                train_->n_labels, dim));
    }

    void retrain() {
        auto& bundle = working_;
        const std::uint64_t version = log_.encoder_trainings + 1;
        const std::string tag = std::to_string(version);

        const RowMatrix z = transform_features(bundle.model.transform, features_);
        const auto centroids = compute_centroids(z, *train_);
        const EncoderTrainConfig encoder_cfg{config_.learning_rate, schedule_.e_label, config_.encoder_batch_size,
                                             derive_seed(config_.seed, "encoder/train/" + tag)};
        bundle.encoder = stage("label encoder", [&] {
            return train_label_encoder(bundle.encoder, centroids.matrix, z, *train_, encoder_cfg);
        });
        encoder_loss_ = train_->size() > count_unlabeled(*train_)
                            ? label_loss(bundle.encoder, centroids.matrix, z, *train_)
                            : 0.0;
        log_.encoder_trainings = version;
        log_.encoder_epochs += schedule_.e_label;

        const HnswParams params{config_.hnsw_m, config_.ef_construction, config_.ef_search};
        bundle.index = stage("label index", [&] {
            return AnnIndex::build(encode_labels(bundle.encoder, centroids.matrix), params,
                                   derive_seed(config_.seed, "index/" + tag));
        });
        shortlist_ = stage("shortlist", [&] { return build_shortlists(bundle.index, z, config_.shortlist_k); });
        ++log_.shortlist_builds;
        shortlist_version_ = version;
        say(fmt("encoder v%llu: loss %.6f, %zu empty labels, shortlist width %zu",
                static_cast<unsigned long long>(version), encoder_loss_, centroids.empty_labels.size(), shortlist_.width));
    }

    double classifier_epoch(std::size_t t) {
        auto& bundle = working_;
        const ClassifierTrainConfig cfg{config_.learning_rate, 1, config_.classifier_batch_size,
                                        config_.random_negatives,
                                        derive_seed(config_.seed, "classifier/epoch/" + std::to_string(t))};
        auto result = stage("classifier", [&] {
            return train_classifier(std::move(bundle.model), optimizer_, features_, *train_, shortlist_, cfg);
        });
        bundle.model = std::move(result.model);
        const double loss = result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back();
        ++log_.classifier_epochs;
        log_.epochs.push_back({t, shortlist_version_, loss});
        say(fmt("epoch %zu: classifier loss %.6f (shortlist v%llu)", t, loss,
                static_cast<unsigned long long>(shortlist_version_)));
        return loss;
    }

    void record_cycle(std::size_t epochs_done, double classifier_loss) {
        const auto predictions = stage("validation", [&] {
            PredictConfig pc = PredictConfig::from(config_);
            pc.k_output = 1;
            return predict_dense(working_, validation_features_, pc);
        });
        CycleRecord rec;
        rec.cycle = log_.cycles.size() + 1;
        rec.classifier_epochs_done = epochs_done;
        rec.encoder_version = log_.encoder_trainings;
        rec.shortlist_encoder_version = shortlist_version_;
        rec.encoder_loss = encoder_loss_;
        rec.classifier_loss = classifier_loss;
        rec.val_p1 = precision_at_k(predictions, truth_, 1);
        rec.val_psp1 = psp_at_k(predictions, truth_, propensity_, 1);
        log_.cycles.push_back(rec);
        say(fmt("cycle %llu: validation P@1 %.4f PSP@1 %.4f", static_cast<unsigned long long>(rec.cycle), rec.val_p1,
                rec.val_psp1));
        if (!best_ || rec.val_p1 > best_p1_) {
            best_ = working_;
            best_p1_ = rec.val_p1;
            best_index_ = log_.cycles.size() - 1;
        }
    }

    TrainConfig config_;
    TrainSchedule schedule_;
    const TrainOptions& options_;

    const Corpus* train_ = nullptr;
    const Corpus* validation_ = nullptr;
    std::optional<Corpus> owned_train_;
    std::optional<Corpus> owned_validation_;

    RowMatrix features_;
    RowMatrix validation_features_;
    Truth truth_;
    PropensityModel propensity_;

    ModelBundle working_;
    ClassifierOptimizer optimizer_;
    Shortlist shortlist_;
    std::uint64_t shortlist_version_ = 0;
    double encoder_loss_ = 0.0;
    TrainingLog log_;

    std::optional<ModelBundle> best_;
    double best_p1_ = -1.0;
    std::uint64_t best_index_ = 0;
};

}  // namespace

ModelBundle run_training(const Corpus& corpus, const TrainConfig& config, const TrainOptions& options) {
    Trainer trainer(corpus, config, options);
    return trainer.run();
}

}  // namespace lightdxml
