#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sbb/jsonl.hpp"
#include "sbb/util.hpp"

namespace sbb {

struct Catalogs;

// ---------------------------------------------------------------------------
// Core intervention / decoding types shared by every backend.
// ---------------------------------------------------------------------------

enum class InterventionKind { none, ablation, subtraction };
enum class AppliesTo { prompt_and_generated, generated_only };
enum class DecodeStrategy { greedy, nucleus };

std::string       intervention_kind_name(InterventionKind k);
InterventionKind  intervention_kind_from_name(const std::string & s);
std::string       applies_to_name(AppliesTo a);
AppliesTo         applies_to_from_name(const std::string & s);
std::string       decode_strategy_name(DecodeStrategy s);
DecodeStrategy    decode_strategy_from_name(const std::string & s);

// A difference-in-means activation direction at one (layer, position) site.
// `layer` indexes residual sites: input of block L for L < n_blocks, and
// n_blocks for the final pre-readout state.
struct RefusalDirection {
    std::string        id;      // stable identifier, e.g. "seed42/L1/P-1"
    std::vector<float> vector;  // raw (un-normalized) direction
    int                layer = 0;
    int                position = -1;  // negative index from sequence end
    std::uint64_t      seed = 0;       // subsample seed that produced it
    int                n_harmful = 0;
    int                n_harmless = 0;
    double             selection_score = -1.0;  // refusal rate under ablation
    double             norm = 0.0;

    // Unit-normalized copy, cached for ablation.
    std::vector<float> unit;

    void               finalize();  // computes norm/unit, assigns id if empty
    static std::string make_id(std::uint64_t seed, int layer, int position);
};

// Degenerate-direction guard: norms below 1e-6 * sqrt(hidden_dim) are zero.
bool direction_is_degenerate(double norm, int hidden_dim);

struct Intervention {
    InterventionKind kind = InterventionKind::none;
    std::string      direction_ref;          // key into a DirectionMap
    int              layer = kAllLayers;     // kAllLayers or a single site
    AppliesTo        applies_to = AppliesTo::prompt_and_generated;

    static constexpr int kAllLayers = -1;
};

using DirectionMap = std::map<std::string, RefusalDirection>;

// Validates kind/layer consistency and resolves direction_ref against `dirs`
// (dimension and non-degeneracy checked against `hidden_dim`). Throws
// ValidationError on any violation. `none` interventions are explicit no-ops
// and skip all checks.
void validate_interventions(const std::vector<Intervention> & ivs,
                            const DirectionMap & dirs, int hidden_dim,
                            int n_sites);

struct DecodeParams {
    int            max_new_tokens = 32;
    DecodeStrategy strategy = DecodeStrategy::nucleus;
    double         temperature = 0.7;
    double         top_p = 0.9;
    std::uint64_t  seed = 0;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Activation capture.
// ---------------------------------------------------------------------------

// Dense activations indexed [prompt][layer][position][hidden_dim].
struct ActivationTensor {
    std::vector<float> values;
    int                n_prompts = 0;
    int                layer_count = 0;   // residual sites, n_blocks + 1
    std::vector<int>   positions;         // negative indices from the end
    int                hidden_dim = 0;

    std::size_t index(int prompt, int layer, int pos_idx) const;
    const float * at(int prompt, int layer, int pos_idx) const;
    float *       at(int prompt, int layer, int pos_idx);
    void          allocate();
};

struct TemplatedPrompt {
    std::vector<int> token_ids;
    int              last_instruction_index = 0;  // index of final template token
};

struct GenerationOutput {
    std::string text;          // decoded new tokens only
    int         n_new_tokens = 0;
};

// ---------------------------------------------------------------------------
// Backend interface.
// ---------------------------------------------------------------------------

class ModelBackend {
  public:
    virtual ~ModelBackend() = default;

    virtual std::string model_id() const = 0;
    virtual int         hidden_dim() const = 0;
    // Residual sites instrumented for capture/intervention: one per block
    // input plus the final pre-readout state.
    virtual int         n_sites() const = 0;
    virtual int         context_limit() const = 0;

    // Wraps raw user text in the model's instruction format.
    virtual TemplatedPrompt chat_template(const std::string & user_text) const = 0;

    // Residual-stream values for each prompt at every site and each requested
    // (negative) position. Interventions, when given, are applied in-stream
    // exactly as during generation; pass {} for clean capture.
    virtual ActivationTensor capture_activations(
        const std::vector<std::string> & prompts,
        const std::vector<int> & positions,
        const std::vector<Intervention> & interventions = {},
        const DirectionMap & directions = {}) const = 0;

    // Generates new tokens for one prompt with interventions applied at every
    // forward step per their applies_to. Empty interventions = plain decoding.
    virtual GenerationOutput generate(
        const std::string & prompt, const DecodeParams & params,
        const std::vector<Intervention> & interventions = {},
        const DirectionMap & directions = {}) const = 0;
};

// Builds a backend from a JSON config object, e.g.
//   {"kind": "toy", "seed": 1}
//   {"kind": "gguf", "path": "model.gguf", "template_style": "llama2"}
// Catalogs are required by backends that derive their lexicon from the
// benchmark data (the toy model); pass nullptr otherwise.
std::unique_ptr<ModelBackend> make_backend(const json & config,
                                           const Catalogs * catalogs);

// GGUF adapter entry point (gguf_backend.cpp).
std::unique_ptr<ModelBackend> make_gguf_backend(const json & config);

} // namespace sbb
