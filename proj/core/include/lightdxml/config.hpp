#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lightdxml/types.hpp"

namespace lightdxml {

/// Unknown key, unparsable value, or out-of-range setting.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct TrainConfig {
    double beta = 0.75;
    std::size_t shortlist_k = 500;
    double learning_rate = 0.006;
    std::size_t e_model = 16;
    std::size_t e_label = 8;
    std::size_t e_hat_label = 8;
    /// 0 means "same as the embedding dimension".
    std::size_t hidden_dim = 0;
    std::size_t hnsw_m = 16;
    std::size_t ef_construction = 200;
    /// 0 means max(100, 4k).
    std::size_t ef_search = 0;
    std::uint64_t seed = 1;
    bool normalize_features = true;
    std::size_t random_negatives = 0;

    std::size_t encoder_batch_size = 256;
    std::size_t classifier_batch_size = 16;
    /// Held-out share of the training corpus when no validation file is given.
    double validation_fraction = 0.2;
    bool use_bias = true;
    std::size_t k_output = 5;
    double propensity_a = 0.55;
    double propensity_b = 1.5;
    /// Width of the random embedding table used when none is supplied.
    std::size_t embedding_dim = 300;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// All recognized keys, in file order.
const std::vector<std::string>& config_keys();

/// Throws ConfigError for an unknown key or a value that does not parse.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const TrainConfig& config, std::string_view key);

/// Applies a "key=value" string.
void apply_override(TrainConfig& config, std::string_view assignment);

/// Throws ConfigError if a value is out of range.
void validate(const TrainConfig& config);

/// key=value lines; '#' starts a comment; blank lines ignored. Values are applied
/// on top of `base`.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

/// One "key=value" line per key in config_keys() order. Doubles use the shortest
/// representation that round-trips.
std::string format_config(const TrainConfig& config);

}  // namespace lightdxml
