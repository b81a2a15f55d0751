#include "sbb/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbb/util.hpp"

namespace sbb {

std::vector<double> stable_softmax(const std::vector<float> & logits,
                                   double temperature) {
    if (logits.empty()) throw ValidationError("softmax over empty logits");
    if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((static_cast<double>(logits[i]) - mx) / temperature);
        sum += p[i];
    }
    for (auto & v : p) v /= sum;
    return p;
}

std::size_t sample_index(const std::vector<float> & logits,
                         const DecodeParams & params, Rng & rng) {
    if (logits.empty()) throw ValidationError("sampling over empty logits");
    if (params.strategy == DecodeStrategy::greedy) {
        return static_cast<std::size_t>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
    }
    params.validate();
    auto probs = stable_softmax(logits, params.temperature);

    std::vector<std::size_t> order(logits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

    // Nucleus: smallest prefix whose cumulative mass reaches top_p.
    double      cum = 0.0;
    std::size_t keep = 0;
    for (; keep < order.size(); ++keep) {
        cum += probs[order[keep]];
        if (cum >= params.top_p) { ++keep; break; }
    }
    if (keep == 0) keep = 1;
    if (keep > order.size()) keep = order.size();

    double mass = 0.0;
    for (std::size_t i = 0; i < keep; ++i) mass += probs[order[i]];
    double u = rng.next_double() * mass;
    double acc = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        acc += probs[order[i]];
        if (u < acc) return order[i];
    }
    return order[keep - 1];
}

} // namespace sbb
