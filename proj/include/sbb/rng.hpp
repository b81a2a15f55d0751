#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace sbb {

// Deterministic 64-bit generator used everywhere randomness is needed.
// The algorithm is pinned by name so stored seeds stay meaningful across
// releases: "sbb-splitmix64-v1" is splitmix64 (Steele et al.) with bounded
// draws via rejection sampling and Fisher-Yates shuffling, independent of
// platform and standard-library implementation.
class Rng {
  public:
    static constexpr std::string_view algorithm = "sbb-splitmix64-v1";

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform integer in [0, bound) without modulo bias; bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    // Uniform double in [0, 1) with 53 bits of precision.
    double next_double();

    // Standard normal via Box-Muller (spare value cached).
    double next_gaussian();

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T> & v) {
        if (v.size() < 2) return;
        for (size_t i = v.size() - 1; i > 0; i--) {
            size_t j = static_cast<size_t>(uniform_below(i + 1));
            using std::swap;
            swap(v[i], v[j]);
        }
    }

  private:
    std::uint64_t state_;
    bool          have_spare_ = false;
    double        spare_      = 0.0;
};

// Derive a child seed from a master seed and a textual key. Used to give
// every (query, condition, repetition) its own decode seed and every query
// its own shuffle seed while keeping a single master seed in the config.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view key);

}  // namespace sbb
