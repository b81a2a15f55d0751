#include "sbb/rng.hpp"

#include "sbb/util.hpp"

#include <cmath>

namespace sbb {

std::uint64_t Rng::next_u64() {
    // splitmix64: Sebastiano Vigna's public-domain reference constants.
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
    // Rejection sampling over the largest multiple of bound below 2^64.
    const std::uint64_t limit = bound * ((~0ull) / bound);
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_           = mag * std::sin(2.0 * M_PI * u2);
    have_spare_      = true;
    return mag * std::cos(2.0 * M_PI * u2);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view key) {
    // Mix the key hash into the master seed, then scramble once so that
    // nearby master seeds do not produce nearby child streams.
    Rng mixer(master_seed ^ fnv1a64(key));
    return mixer.next_u64();
}

}  // namespace sbb
