#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace lightdxml {

/// Seeded random source. mt19937_64 is fully specified by the standard, and the
/// floating point draws below are written out by hand so that a seed yields the
/// same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in (0, 1].
    double uniform_positive() { return 1.0 - uniform(); }
    /// Standard normal (Box-Muller).
    double normal();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent stage seed from the root seed and a fixed stage label.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

}  // namespace lightdxml
