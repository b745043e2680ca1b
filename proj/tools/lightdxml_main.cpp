// lightdxml: train, predict, evaluate, synth, inspect, sweep.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lightdxml/bundle.hpp"
#include "lightdxml/config.hpp"
#include "lightdxml/dataset.hpp"
#include "lightdxml/features.hpp"
#include "lightdxml/inference.hpp"
#include "lightdxml/metrics.hpp"
#include "lightdxml/parallel.hpp"
#include "lightdxml/trainer.hpp"

namespace ldx = lightdxml;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Common {
    std::size_t threads = 0;
    bool deterministic = false;
};

struct TrainArgs {
    std::string data;
    std::string validation;
    std::string config;
    std::string embeddings;
    std::string model;
    std::vector<std::string> overrides;
};

struct PredictArgs {
    std::string model;
    std::string data;
    std::string output;
    std::string predictions;
    std::string csv;
    std::string report;
    std::optional<double> beta;
    std::optional<std::size_t> k;
    std::optional<std::size_t> shortlist_k;
    std::optional<std::size_t> ef_search;
};

struct SynthArgs {
    ldx::SyntheticConfig cfg;
    std::string output;
    std::string test_output;
    double test_fraction = 0.2;
    std::string embeddings_out;
    std::string planted_out;
};

struct SweepArgs {
    std::string param = "beta";
    std::string values;
    std::string model;
    std::string data;
    std::string validation;
    std::string config;
    std::string embeddings;
    std::string output;
    std::vector<std::string> overrides;
};

ldx::ParsedCorpus read_corpus(const std::string& path) {
    auto parsed = ldx::load_corpus(path);
    if (parsed.report.merged_duplicate_features > 0 || parsed.report.duplicate_labels > 0) {
        std::cerr << path << ": merged " << parsed.report.merged_duplicate_features << " duplicate features, dropped "
                  << parsed.report.duplicate_labels << " duplicate labels\n";
    }
    return parsed;
}

ldx::TrainConfig effective_config(const std::string& path, const std::vector<std::string>& overrides) {
    ldx::TrainConfig cfg;
    if (!path.empty()) {
        cfg = ldx::load_config(path);
    }
    for (const auto& o : overrides) {
        ldx::apply_override(cfg, o);
    }
    ldx::validate(cfg);
    return cfg;
}

void echo_config(const ldx::TrainConfig& cfg) {
    std::cout << "# effective config\n" << ldx::format_config(cfg);
    const auto schedule = ldx::TrainSchedule::from(cfg);
    std::cout << "total epochs: " << ldx::total_epochs(schedule) << "\n";
}

ldx::PredictConfig predict_config(const ldx::ModelBundle& bundle, const PredictArgs& a) {
    auto pc = ldx::PredictConfig::from(bundle.config);
    if (a.beta) pc.beta = *a.beta;
    if (a.k) pc.k_output = *a.k;
    if (a.shortlist_k) pc.k_shortlist = *a.shortlist_k;
    if (a.ef_search) pc.ef_search = *a.ef_search;
    pc.k_output = std::min(pc.k_output, pc.k_shortlist);
    pc.validate();
    return pc;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ldx::Error("cannot write " + path);
    }
    out << text;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) {
            throw ldx::Error("bad sweep value '" + item + "'");
        }
        values.push_back(v);
    }
    if (values.empty()) {
        throw ldx::Error("--values needs at least one number");
    }
    return values;
}

int run_train(const TrainArgs& a) {
    const auto cfg = effective_config(a.config, a.overrides);
    echo_config(cfg);
    const auto corpus = read_corpus(a.data).corpus;
    std::optional<ldx::Corpus> validation;
    if (!a.validation.empty()) {
        validation = read_corpus(a.validation).corpus;
    }
    std::optional<ldx::EmbeddingTable> table;
    if (!a.embeddings.empty()) {
        table = ldx::load_embedding_table(a.embeddings);
    }

    ldx::TrainOptions options;
    options.validation = validation ? &*validation : nullptr;
    options.embeddings = table ? &*table : nullptr;
    options.progress = [](const std::string& line) { std::cout << line << '\n' << std::flush; };

    const auto start = Clock::now();
    const auto bundle = ldx::run_training(corpus, cfg, options);
    const double train_seconds = seconds_since(start);
    ldx::save_bundle(bundle, a.model);

    const auto& best = bundle.log.cycles.at(bundle.log.best_cycle);
    std::cout << "classifier epochs: " << bundle.log.classifier_epochs
              << ", encoder epochs: " << bundle.log.encoder_epochs
              << ", encoder trainings: " << bundle.log.encoder_trainings << "\n";
    std::printf("best cycle %llu: validation P@1 %.4f PSP@1 %.4f\n", static_cast<unsigned long long>(best.cycle),
                best.val_p1, best.val_psp1);

    double ms_per_point = 0.0;
    if (validation && validation->size() > 0) {
        const auto t0 = Clock::now();
        const auto rows = ldx::predict_batch(bundle, *validation, ldx::PredictConfig::from(bundle.config));
        ms_per_point = 1000.0 * seconds_since(t0) / static_cast<double>(rows.size());
    }
    std::printf("train seconds: %.3f\n", train_seconds);
    std::printf("predict ms/point: %.4f\n", ms_per_point);
    std::cout << "saved " << a.model << "\n";
    return 0;
}

int run_predict(const PredictArgs& a) {
    const auto bundle = ldx::load_bundle(a.model);
    const auto corpus = read_corpus(a.data).corpus;
    const auto pc = predict_config(bundle, a);
    const auto t0 = Clock::now();
    const auto rows = ldx::predict_batch(bundle, corpus, pc);
    const double seconds = seconds_since(t0);
    std::ofstream out(a.output, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ldx::Error("cannot write " + a.output);
    }
    ldx::write_predictions(out, rows);
    std::printf("wrote %zu rows to %s\n", rows.size(), a.output.c_str());
    std::printf("predict ms/point: %.4f\n", rows.empty() ? 0.0 : 1000.0 * seconds / static_cast<double>(rows.size()));
    return 0;
}

int run_evaluate(const PredictArgs& a) {
    const auto bundle = ldx::load_bundle(a.model);
    const auto corpus = read_corpus(a.data).corpus;
    std::vector<ldx::PredictionRow> rows;
    double seconds = 0.0;
    if (!a.predictions.empty()) {
        std::ifstream in(a.predictions);
        if (!in) {
            throw ldx::Error("cannot read " + a.predictions);
        }
        rows = ldx::parse_predictions(in);
    } else {
        const auto t0 = Clock::now();
        rows = ldx::predict_batch(bundle, corpus, predict_config(bundle, a));
        seconds = seconds_since(t0);
    }
    const auto model = ldx::propensities(bundle.label_frequency, bundle.n_train_points, bundle.config.propensity_a,
                                         bundle.config.propensity_b);
    auto report = ldx::evaluate(rows, ldx::truth_of(corpus), model);
    report.predict_ms_per_point = rows.empty() ? 0.0 : 1000.0 * seconds / static_cast<double>(rows.size());
    std::cout << ldx::format_report(report, false);
    std::printf("train seconds: n/a (not stored in the bundle)\n");
    std::printf("predict ms/point: %.4f\n", report.predict_ms_per_point);
    if (!a.report.empty()) {
        write_text(a.report, ldx::format_report(report, false));
    }
    if (!a.csv.empty()) {
        write_text(a.csv, ldx::report_csv(report));
    }
    if (report.has_nan()) {
        std::cerr << "error: a metric is NaN\n";
        return 1;
    }
    return 0;
}

int run_synth(const SynthArgs& a) {
    const auto synth = ldx::generate_synthetic(a.cfg);
    if (a.test_output.empty()) {
        ldx::save_corpus(a.output, synth.corpus);
        std::printf("wrote %zu points to %s\n", synth.corpus.size(), a.output.c_str());
    } else {
        const auto [train, test] = ldx::split(synth.corpus, a.test_fraction, a.cfg.seed ^ 0x5eedULL);
        ldx::save_corpus(a.output, train);
        ldx::save_corpus(a.test_output, test);
        std::printf("wrote %zu points to %s and %zu to %s\n", train.size(), a.output.c_str(), test.size(),
                    a.test_output.c_str());
    }
    if (!a.embeddings_out.empty()) {
        ldx::save_embedding_table(a.embeddings_out, ldx::identity_embedding_table(a.cfg.n_features, a.cfg.dim));
    }
    if (!a.planted_out.empty()) {
        ldx::save_embedding_table(a.planted_out, ldx::EmbeddingTable{synth.planted});
    }
    return 0;
}

int run_inspect(const std::string& path) {
    const auto parsed = read_corpus(path);
    const auto& c = parsed.corpus;
    const auto stats = ldx::label_stats(c);
    std::printf("N=%zu V=%zu L=%zu\n", c.size(), c.n_features, c.n_labels);
    std::size_t nnz = 0;
    for (const auto& p : c.points) {
        nnz += p.features.size();
    }
    const double n = std::max<double>(1.0, static_cast<double>(c.size()));
    std::printf("avg positives/point: %.4f\n", static_cast<double>(stats.total_assignments()) / n);
    std::printf("avg features/point: %.4f\n", static_cast<double>(nnz) / n);
    std::printf("points without labels: %zu\n", ldx::count_unlabeled(c));
    auto freq = stats.frequency;
    std::sort(freq.begin(), freq.end());
    if (!freq.empty()) {
        std::printf("label frequency percentiles:");
        for (const int q : {0, 25, 50, 75, 90, 99, 100}) {
            const auto idx = static_cast<std::size_t>(q / 100.0 * static_cast<double>(freq.size() - 1) + 0.5);
            std::printf(" p%d=%zu", q, freq[idx]);
        }
        std::printf("\n");
        std::printf("labels without points: %zu\n",
                    static_cast<std::size_t>(std::count(freq.begin(), freq.end(), std::size_t{0})));
    }
    return 0;
}

int run_sweep(const SweepArgs& a) {
    const auto values = parse_values(a.values);
    std::string csv;
    if (a.param == "beta") {
        if (a.model.empty() || a.data.empty()) {
            throw ldx::Error("sweep --param beta needs --model and --data");
        }
        const auto bundle = ldx::load_bundle(a.model);
        const auto corpus = read_corpus(a.data).corpus;
        const auto dense = ldx::embed_points(corpus, bundle.embeddings, bundle.config.normalize_features);
        const auto model = ldx::propensities(bundle.label_frequency, bundle.n_train_points,
                                             bundle.config.propensity_a, bundle.config.propensity_b);
        const auto rows = ldx::sweep_beta(bundle, dense.matrix, ldx::truth_of(corpus), model, values,
                                          ldx::PredictConfig::from(bundle.config));
        csv = ldx::sweep_csv("beta", rows);
    } else if (a.param == "e_model") {
        if (a.data.empty()) {
            throw ldx::Error("sweep --param e_model needs --data");
        }
        const auto corpus = read_corpus(a.data).corpus;
        std::optional<ldx::Corpus> validation;
        if (!a.validation.empty()) {
            validation = read_corpus(a.validation).corpus;
        }
        std::optional<ldx::EmbeddingTable> table;
        if (!a.embeddings.empty()) {
            table = ldx::load_embedding_table(a.embeddings);
        }
        std::vector<ldx::SweepRow> rows;
        for (const double v : values) {
            if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
                throw ldx::Error("e_model values must be non-negative integers");
            }
            auto cfg = effective_config(a.config, a.overrides);
            cfg.e_model = static_cast<std::size_t>(v);
            ldx::TrainOptions options;
            options.validation = validation ? &*validation : nullptr;
            options.embeddings = table ? &*table : nullptr;
            const auto t0 = Clock::now();
            const auto bundle = ldx::run_training(corpus, cfg, options);
            // The last cycle reflects the full e_model budget.
            const auto& last = bundle.log.cycles.back();
            rows.push_back({v, last.val_p1, last.val_psp1});
            std::fprintf(stderr, "e_model=%zu: P@1 %.4f PSP@1 %.4f (train seconds %.3f)\n", cfg.e_model,
                         last.val_p1, last.val_psp1, seconds_since(t0));
        }
        csv = ldx::sweep_csv("e_model", rows);
    } else {
        throw ldx::Error("unknown sweep parameter '" + a.param + "' (beta or e_model)");
    }
    if (a.output.empty()) {
        std::cout << csv;
    } else {
        write_text(a.output, csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LightDXML extreme multi-label classifier"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--threads", common.threads, "Worker threads (0 = runtime default)");
    app.add_flag("--deterministic", common.deterministic, "Single worker everywhere");
    app.fallthrough();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a model bundle");
    train_cmd->add_option("--data", train.data, "Training corpus")->required();
    train_cmd->add_option("--validation", train.validation, "Validation corpus (default: split off the training data)");
    train_cmd->add_option("--config", train.config, "key=value config file");
    train_cmd->add_option("--embeddings", train.embeddings, "Word embedding table (default: seeded random)");
    train_cmd->add_option("--model", train.model, "Output bundle path")->required();
    train_cmd->add_option("--override", train.overrides, "key=value, repeatable")->take_all();

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "Write top-k predictions");
    PredictArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute P@k and PSP@k");
    for (auto [cmd, args] : {std::pair{predict_cmd, &predict}, std::pair{evaluate_cmd, &evaluate}}) {
        cmd->add_option("--model", args->model, "Bundle path")->required();
        cmd->add_option("--data", args->data, "Test corpus")->required();
        cmd->add_option("--beta", args->beta, "Ensemble weight");
        cmd->add_option("--k", args->k, "Labels reported per point");
        cmd->add_option("--shortlist-k", args->shortlist_k, "Shortlist size");
        cmd->add_option("--ef-search", args->ef_search, "Index beam width");
    }
    predict_cmd->add_option("--output", predict.output, "Prediction file")->required();
    evaluate_cmd->add_option("--predictions", evaluate.predictions, "Score an existing prediction file");
    evaluate_cmd->add_option("--report", evaluate.report, "Write the metric table here");
    evaluate_cmd->add_option("--csv", evaluate.csv, "Write metrics as CSV here");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
    synth_cmd->add_option("--output", synth.output, "Corpus path")->required();
    synth_cmd->add_option("--test-output", synth.test_output, "Also write a held-out test corpus");
    synth_cmd->add_option("--test-fraction", synth.test_fraction, "Share of points for --test-output");
    synth_cmd->add_option("--points", synth.cfg.n_points);
    synth_cmd->add_option("--labels", synth.cfg.n_labels);
    synth_cmd->add_option("--features", synth.cfg.n_features);
    synth_cmd->add_option("--dim", synth.cfg.dim);
    synth_cmd->add_option("--zipf", synth.cfg.zipf_exponent);
    synth_cmd->add_option("--noise", synth.cfg.noise);
    synth_cmd->add_option("--seed", synth.cfg.seed);
    synth_cmd->add_option("--min-labels", synth.cfg.min_labels_per_point);
    synth_cmd->add_option("--max-labels", synth.cfg.max_labels_per_point);
    synth_cmd->add_option("--label-decay", synth.cfg.label_decay, "Weight ratio between a point's labels, rarest first (1 = plain mean)");
    synth_cmd->add_option("--embeddings-out", synth.embeddings_out, "Write the matching identity embedding table");
    synth_cmd->add_option("--planted-out", synth.planted_out, "Write the planted label vectors");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print corpus statistics");
    inspect_cmd->add_option("--data", inspect_path, "Corpus")->required();

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Ablation table over beta or e_model");
    sweep_cmd->add_option("--param", sweep.param, "beta or e_model");
    sweep_cmd->add_option("--values", sweep.values, "Comma-separated values")->required();
    sweep_cmd->add_option("--model", sweep.model, "Bundle (beta sweep)");
    sweep_cmd->add_option("--data", sweep.data, "Evaluation corpus (beta) or training corpus (e_model)");
    sweep_cmd->add_option("--validation", sweep.validation, "Validation corpus (e_model)");
    sweep_cmd->add_option("--config", sweep.config, "Config file (e_model)");
    sweep_cmd->add_option("--embeddings", sweep.embeddings, "Embedding table (e_model)");
    sweep_cmd->add_option("--override", sweep.overrides, "key=value, repeatable (e_model)")->take_all();
    sweep_cmd->add_option("--output", sweep.output, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        if (common.deterministic) {
            ldx::set_num_threads(1);
        } else if (common.threads > 0) {
            ldx::set_num_threads(common.threads);
        }
        if (*train_cmd) return run_train(train);
        if (*predict_cmd) return run_predict(predict);
        if (*evaluate_cmd) return run_evaluate(evaluate);
        if (*synth_cmd) return run_synth(synth);
        if (*inspect_cmd) return run_inspect(inspect_path);
        if (*sweep_cmd) return run_sweep(sweep);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
