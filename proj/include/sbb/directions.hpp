#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sbb/backend.hpp"
#include "sbb/prompts.hpp"

// Difference-in-means refusal-direction extraction and selection.
//
// For every residual site and each of the last candidate positions of the
// templated prompt, the candidate direction is
//     r = mean(harmful activations) - mean(harmless activations).
// Candidates whose norm is numerically zero are dropped. The selected
// direction is the candidate whose all-site ablation yields the lowest
// refusal-marker rate on the held-out harmful validation set, with ties
// broken toward the earlier site and then the position nearest the end.
namespace sbb {

// Default candidate positions: the last five tokens of the templated prompt.
std::vector<int> default_candidate_positions();

// Mean over prompts of the states at (site, position index) in a capture.
std::vector<float> mean_activation(const ActivationTensor & t, int site, int pos_idx);

// Elementwise mu - nu packaged as a finalized direction.
RefusalDirection activation_direction(const std::vector<float> & harmful_mean,
                                      const std::vector<float> & harmless_mean,
                                      int site, int position, std::uint64_t seed,
                                      int n_harmful, int n_harmless);

struct CandidateSet {
    std::vector<RefusalDirection> candidates;  // non-degenerate, stable order
    std::vector<std::string>      dropped;     // ids of degenerate candidates
    std::vector<std::string>      warnings;
};

// All (site x position) difference-in-means candidates for the given pools.
// Throws ValidationError if every candidate is degenerate.
CandidateSet candidate_directions(const ModelBackend & backend,
                                  const std::vector<std::string> & harmful,
                                  const std::vector<std::string> & harmless,
                                  const std::vector<int> & positions,
                                  std::uint64_t seed);

struct SelectionOutcome {
    RefusalDirection best;
    // (direction id, ablated refusal-marker rate) for every candidate.
    std::vector<std::pair<std::string, double>> scores;
};

// Greedy-decodes every validation prompt under all-site ablation of each
// candidate and picks the lowest refusal rate (ties: lower layer, then
// position closest to the sequence end). selection_score on the result is
// the winning rate.
SelectionOutcome select_direction(const ModelBackend & backend,
                                  const std::vector<RefusalDirection> & candidates,
                                  const std::vector<std::string> & harmful_val,
                                  int max_new_tokens = 16);

struct VariantExtraction {
    std::vector<RefusalDirection> selected;  // one per variant seed
    json                          metadata;  // per-variant seeds, samples, scores
    std::vector<std::string>      warnings;
};

// Repeats extraction across `n_variants` derived seeds. Each variant draws a
// mirrored subsample (same size, independently shuffled) of both training
// pools, extracts candidates, and selects against the full validation pool.
// n_harmful / n_harmless of 0 mean "use the whole pool".
VariantExtraction sample_direction_variants(
    const ModelBackend & backend, const PromptSet & harmful_train,
    const PromptSet & harmless_train, const PromptSet & harmful_val,
    int n_variants, std::size_t n_harmful, std::size_t n_harmless,
    std::uint64_t master_seed,
    const std::vector<int> & positions = default_candidate_positions());

// Persistence: directions travel as JSON metadata plus a base64 little-endian
// float32 payload, and the round trip is bit-exact.
json             direction_to_json(const RefusalDirection & d);
RefusalDirection direction_from_json(const json & j);

void save_directions(const std::string & path,
                     const std::vector<RefusalDirection> & directions,
                     const json & metadata, const std::string & model_id,
                     int hidden_dim);
// Returns directions keyed by id; file metadata lands in *metadata_out.
DirectionMap load_directions(const std::string & path, json * metadata_out = nullptr);

}  // namespace sbb
