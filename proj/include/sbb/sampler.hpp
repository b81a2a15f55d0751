#pragma once

#include <cstddef>
#include <vector>

#include "sbb/backend.hpp"
#include "sbb/rng.hpp"

namespace sbb {

// Picks the next token index from a logit vector. Greedy takes the first
// maximal logit; nucleus applies temperature, keeps the smallest prefix of
// the sorted distribution whose mass reaches top_p (always at least one
// token), renormalizes, and draws from `rng`.
std::size_t sample_index(const std::vector<float> & logits,
                         const DecodeParams & params, Rng & rng);

// Softmax with max-subtraction; exposed for tests.
std::vector<double> stable_softmax(const std::vector<float> & logits,
                                   double temperature);

} // namespace sbb
