#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sbb/backend.hpp"
#include "sbb/jsonl.hpp"
#include "sbb/steering.hpp"

// Validation analyses over backends and run stores: per-layer cosine
// profiles against the refusal direction, biased/unbiased representation
// separation, cross-direction response agreement, the refusal-compliance
// activation map, and the few-shot bias audit of direction-training prompts.
namespace sbb {

struct SimilarityProfile {
    std::string         dataset_name;
    std::vector<double> per_layer;  // mean cosine to the direction, one per site
    int                 n_prompts = 0;  // prompts averaged
    int                 n_skipped = 0;  // dropped for a zero-norm activation

    json to_json() const;
};

// Mean per-layer cosine between prompt activations (at the direction's
// position) and the direction. Sets larger than n_sample are subsampled
// deterministically from `seed`.
SimilarityProfile refusal_similarity_profile(const ModelBackend & backend,
                                             const std::vector<std::string> & prompts,
                                             const std::string & dataset_name,
                                             const RefusalDirection & direction,
                                             int           n_sample = 128,
                                             std::uint64_t seed = 0);

struct LayerSeparation {
    int                                layer = 0;
    std::vector<std::array<double, 2>> biased_xy;    // 2-component projection
    std::vector<std::array<double, 2>> unbiased_xy;
    double                             silhouette = 0.0;  // on full-dim points
};

struct SeparationResult {
    std::vector<LayerSeparation> layers;
    std::vector<int>             skipped_layers;
    int                          best_layer = -1;  // max silhouette, -1 if none

    json to_json() const;
};

// How a (query, response) pair is concatenated before re-encoding.
std::string concat_pair(const std::string & query, const std::string & response);

// Per-layer 2-component projection plus silhouette of biased vs unbiased
// pair texts (last-token activations). Layers with fewer than 2 points per
// label are skipped.
SeparationResult separation_analysis(const ModelBackend & backend,
                                     const std::vector<std::string> & biased_pairs,
                                     const std::vector<std::string> & unbiased_pairs);

struct AgreementMatrix {
    std::vector<std::string>         direction_ids;  // sorted
    std::vector<std::vector<double>> jaccard;        // RxR, symmetric, unit diagonal
    std::vector<std::vector<int>>    cells_used;     // cells behind each mean

    json to_json() const;
};

// Pairwise Jaccard similarity between the valid answered-group sets of each
// direction, computed per (category, subject) cell across that cell's query
// variations and averaged over cells where both directions answered.
AgreementMatrix direction_agreement(const std::vector<GenerationRecord> & records);

struct ComplianceMap {
    // Each point: (separator decision score, first-principal-component coord).
    std::vector<std::array<double, 2>> harmful_points;
    std::vector<std::array<double, 2>> harmless_points;
    std::vector<std::array<double, 2>> sbb_before;
    std::vector<std::array<double, 2>> sbb_after;  // direction subtracted in-stream
    double training_accuracy = 0.0;
    double mean_score_before = 0.0;
    double mean_score_after  = 0.0;

    json to_json() const;
};

// Linear comply(+)/refuse(-) separator on final-layer last-token activations
// of the test pools, then benchmark prompts plotted before and after
// direction subtraction.
ComplianceMap refusal_compliance_map(const ModelBackend & backend,
                                     const std::vector<std::string> & harmful_test,
                                     const std::vector<std::string> & harmless_test,
                                     const std::vector<std::string> & sbb_prompts,
                                     const RefusalDirection & direction);

struct AuditExemplars {
    std::string biased1;
    std::string harmless1;
    std::string biased2;
    std::string harmless2;
};

// The fixed few-shot template asking whether a prompt is biased.
std::string bias_audit_prompt(const std::string & test_prompt,
                              const AuditExemplars & exemplars);

enum class AuditVerdict { biased, unbiased, indeterminate };

// Leading "Yes" -> biased, leading "No" -> unbiased, anything else (refusals
// included) -> indeterminate.
AuditVerdict parse_audit_verdict(const std::string & response_text);

struct AuditReport {
    int    n = 0;
    int    biased = 0;
    int    unbiased = 0;
    int    indeterminate = 0;
    double fraction_biased = 0.0;

    json to_json() const;
};

AuditReport run_bias_audit(const ModelBackend & backend,
                           const std::vector<std::string> & test_prompts,
                           const AuditExemplars & exemplars, const DecodeParams & params);

}  // namespace sbb
