#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sbb/backend.hpp"
#include "sbb/catalog.hpp"

namespace sbb {

// Tunable constants of the synthetic aligned chat model. Defaults are
// calibrated so that harmful-instruction prompts refuse, plain-task prompts
// comply, and benchmark queries mostly refuse with a subset answered.
struct ToyConfig {
    std::uint64_t seed = 1;

    // Block 0: uniform-attention accumulators.
    float harm_gain = 6.0f;    // amplification of the mean harm marker
    float ctx_gain = 0.3f;     // mean content embedding mixed into every state
    // Number of orthonormal content-space facet axes the per-word harm
    // feature is distributed over (each word hashes to one facet). A
    // raw-embedding difference-in-means direction only captures the facet
    // mix of a single position's vocabulary, so ablating it leaves most of
    // the prompt's harm signal intact — as in real models, where embedding
    // differences do not disable refusal.
    int harm_facets = 12;

    // Block 1: trigger detector sigma(k * (harm - theta)) * beta.
    float trig_theta = 0.45f;
    float trig_k = 8.0f;
    float trig_beta = 5.0f;

    // Block 2: option-copy attention head. copy_strength is kept near the
    // sampling temperature so answers spread over the top few options.
    float copy_strength = 10.0f;  // logit scale of the copied option mix
    float attn_flag_gain = 8.0f;  // attention bonus for option tokens
    float attn_bias_scale = 0.9f; // fixed per-option attention bias spread
    float attn_ctx_scale = 4.0f;  // query-dependent attention modulation
    float flag_sat = 2.0f;        // saturated "options present" level
    float flag_sat_k = 60.0f;
    float flag_sat_theta = 0.05f;

    // Block 3: gated bigram output circuits. The sharp gate keeps the
    // scripted-refusal leak below the option logits outside the trigger zone.
    float gate_center = 2.2f;  // trigger level where refusal switches on
    float gate_k = 12.0f;
    float chain_strength = 400.0f;  // scripted-continuation logit
    float sure_strength = 60.0f;    // generic compliance opener logit
};

// A deterministic 4-block toy chat transformer over a word/phrase lexicon.
//
// Residual stream (hidden_dim = 64):
//   dims 0..47   content embedding subspace
//   dims 48..60  scripted-token command channels (one-hot per special token)
//   dim  61      option-flag channel (demographic group tokens)
//   dim  62      harm-marker accumulator (written by block 0 from a fixed
//                content-space probe; zero in raw embeddings)
//   dim  63      refusal-trigger channel
//
// Safety behavior is mediated linearly through dim 62/63 after block 0, so a
// difference-in-means direction taken at block-1 input or deeper genuinely
// disables refusal when ablated, while raw-embedding differences do not.
class ToyBackend : public ModelBackend {
  public:
    static constexpr int kHiddenDim = 64;
    static constexpr int kBlocks = 4;
    static constexpr int kEDim = 48;   // content subspace size
    static constexpr int kCmdBase = 48;
    static constexpr int kNCmd = 13;
    static constexpr int kFlagDim = 61;
    static constexpr int kHarmDim = 62;
    static constexpr int kTrigDim = 63;

    ToyBackend(const ToyConfig & cfg, const Catalogs & catalogs);

    std::string model_id() const override;
    int         hidden_dim() const override { return kHiddenDim; }
    int         n_sites() const override { return kBlocks + 1; }
    int         context_limit() const override { return 4096; }

    TemplatedPrompt  chat_template(const std::string & user_text) const override;
    ActivationTensor capture_activations(
        const std::vector<std::string> & prompts, const std::vector<int> & positions,
        const std::vector<Intervention> & interventions = {},
        const DirectionMap & directions = {}) const override;
    GenerationOutput generate(const std::string & prompt, const DecodeParams & params,
                              const std::vector<Intervention> & interventions = {},
                              const DirectionMap & directions = {}) const override;

    // Exposed for tests.
    std::vector<int> tokenize(const std::string & text) const;
    std::string      decode(const std::vector<int> & ids) const;
    const ToyConfig & config() const { return cfg_; }

  private:
    struct TokenInfo {
        std::string        surface;
        std::vector<float> embedding;  // kHiddenDim
        float              harm_w = 0.0f;
        bool               option = false;
        int                cmd = -1;  // command channel index or -1
    };

    // Command channel ids (order fixes dims 48..60).
    enum Cmd {
        kCmdIm, kCmdSorry, kCmdComma, kCmdI, kCmdCannot, kCmdHelp, kCmdWith,
        kCmdThat, kCmdDot, kCmdSure, kCmdThing, kCmdEos, kCmdAsst
    };

    int  intern(const std::string & surface, float harm_w, bool option, int cmd);
    int  token_for(const std::string & atom) const;  // interned or hash-derived
    void build_vocab(const Catalogs & catalogs);
    std::vector<float> seeded_embedding(const std::string & folded) const;

    // Full forward pass; states[site][pos] is the residual stream at that
    // boundary after any matching intervention. Returns final-site states.
    struct Forward {
        std::vector<std::vector<std::vector<float>>> sites;  // [site][pos][dim]
    };
    Forward forward(const std::vector<int> & ids, int prompt_len,
                    const std::vector<Intervention> & ivs,
                    const DirectionMap & dirs) const;

    void apply_site_interventions(std::vector<std::vector<float>> & states,
                                  int site, int prompt_len,
                                  const std::vector<Intervention> & ivs,
                                  const DirectionMap & dirs) const;

    std::vector<float> output_logits(const std::vector<float> & last_state) const;

    ToyConfig cfg_;
    mutable std::vector<TokenInfo>                 tokens_;
    mutable std::unordered_map<std::string, int>   by_folded_;
    std::unordered_map<std::string, float>         harm_lexicon_;
    // Multi-atom phrases (folded atoms joined by '\x01') -> interned id.
    mutable std::unordered_map<std::string, int>   phrases_;
    int max_phrase_atoms_ = 1;

    int bos_ = -1, user_ = -1, asst_ = -1, eos_ = -1;
    std::vector<int>   emit_set_;   // tokens the output head can produce
    std::vector<float> attn_ctx_w_; // kEDim, fixed random attention query mod
    std::vector<std::vector<float>> harm_facets_; // orthonormal facet axes
    std::vector<float> harm_read_;  // sum of facet axes; block-0 harm probe
};

} // namespace sbb
