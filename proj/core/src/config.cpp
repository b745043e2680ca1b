#include "lightdxml/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace lightdxml {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1") {
        return true;
    }
    if (text == "false" || text == "0") {
        return false;
    }
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(text) + "' (want true/false)");
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

struct Field {
    std::string name;
    std::function<void(TrainConfig&, std::string_view)> set;
    std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field size_field(std::string name, T TrainConfig::*member) {
    return {name,
            [name, member](TrainConfig& c, std::string_view v) { c.*member = parse_number<T>(name, v); },
            [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(std::string name, double TrainConfig::*member) {
    return {name,
            [name, member](TrainConfig& c, std::string_view v) {
                const double x = parse_number<double>(name, v);
                if (!std::isfinite(x)) {
                    throw ConfigError("non-finite value for " + name);
                }
                c.*member = x;
            },
            [member](const TrainConfig& c) { return format_double(c.*member); }};
}

Field bool_field(std::string name, bool TrainConfig::*member) {
    return {name, [name, member](TrainConfig& c, std::string_view v) { c.*member = parse_bool(name, v); },
            [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        double_field("beta", &TrainConfig::beta),
        size_field("shortlist_k", &TrainConfig::shortlist_k),
        double_field("learning_rate", &TrainConfig::learning_rate),
        size_field("e_model", &TrainConfig::e_model),
        size_field("e_label", &TrainConfig::e_label),
        size_field("e_hat_label", &TrainConfig::e_hat_label),
        size_field("hidden_dim", &TrainConfig::hidden_dim),
        size_field("hnsw_m", &TrainConfig::hnsw_m),
        size_field("ef_construction", &TrainConfig::ef_construction),
        size_field("ef_search", &TrainConfig::ef_search),
        size_field("seed", &TrainConfig::seed),
        bool_field("normalize_features", &TrainConfig::normalize_features),
        size_field("random_negatives", &TrainConfig::random_negatives),
        size_field("encoder_batch_size", &TrainConfig::encoder_batch_size),
        size_field("classifier_batch_size", &TrainConfig::classifier_batch_size),
        double_field("validation_fraction", &TrainConfig::validation_fraction),
        bool_field("use_bias", &TrainConfig::use_bias),
        size_field("k_output", &TrainConfig::k_output),
        double_field("propensity_a", &TrainConfig::propensity_a),
        double_field("propensity_b", &TrainConfig::propensity_b),
        size_field("embedding_dim", &TrainConfig::embedding_dim),
    };
    return table;
}

const Field& find_field(std::string_view key) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.name == key; });
    if (it == table.end()) {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
    return *it;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& f : fields()) {
            out.push_back(f.name);
        }
        return out;
    }();
    return keys;
}

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
    find_field(trim(key)).set(config, trim(value));
}

std::string get_config_value(const TrainConfig& config, std::string_view key) {
    return find_field(key).get(config);
}

void apply_override(TrainConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    }
    set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void validate(const TrainConfig& c) {
    if (!(c.beta >= 0.0 && c.beta <= 1.0)) {
        throw ConfigError("beta must lie in [0, 1]");
    }
    if (c.shortlist_k == 0) {
        throw ConfigError("shortlist_k must be positive");
    }
    if (!(c.learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (c.e_model > 0 && c.e_hat_label == 0) {
        throw ConfigError("e_hat_label must be >= 1 when e_model > 0");
    }
    if (c.hnsw_m < 2) {
        throw ConfigError("hnsw_m must be >= 2");
    }
    if (c.ef_construction == 0) {
        throw ConfigError("ef_construction must be positive");
    }
    if (c.encoder_batch_size == 0 || c.classifier_batch_size == 0) {
        throw ConfigError("batch sizes must be positive");
    }
    if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in [0, 1)");
    }
    if (c.k_output == 0 || c.k_output > c.shortlist_k) {
        throw ConfigError("k_output must be in [1, shortlist_k]");
    }
    if (!(c.propensity_a > 0.0) || !(c.propensity_b > 0.0)) {
        throw ConfigError("propensity_a and propensity_b must be positive");
    }
    if (c.embedding_dim == 0) {
        throw ConfigError("embedding_dim must be positive");
    }
}

TrainConfig parse_config(std::istream& in, TrainConfig base) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        try {
            apply_override(base, view);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    return parse_config(in, std::move(base));
}

std::string format_config(const TrainConfig& config) {
    std::ostringstream out;
    for (const auto& f : fields()) {
        out << f.name << '=' << f.get(config) << '\n';
    }
    return out.str();
}

}  // namespace lightdxml
