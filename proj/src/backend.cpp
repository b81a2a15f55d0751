#include "sbb/backend.hpp"

#include <cmath>

#include "sbb/toy_backend.hpp"

namespace sbb {

std::string intervention_kind_name(InterventionKind k) {
    switch (k) {
        case InterventionKind::none: return "none";
        case InterventionKind::ablation: return "ablation";
        case InterventionKind::subtraction: return "subtraction";
    }
    throw Error("unreachable intervention kind");
}

InterventionKind intervention_kind_from_name(const std::string & s) {
    if (s == "none") return InterventionKind::none;
    if (s == "ablation") return InterventionKind::ablation;
    if (s == "subtraction") return InterventionKind::subtraction;
    throw ValidationError("unknown intervention kind: " + s);
}

std::string applies_to_name(AppliesTo a) {
    return a == AppliesTo::prompt_and_generated ? "prompt-and-generated"
                                                : "generated-only";
}

AppliesTo applies_to_from_name(const std::string & s) {
    if (s == "prompt-and-generated") return AppliesTo::prompt_and_generated;
    if (s == "generated-only") return AppliesTo::generated_only;
    throw ValidationError("unknown applies_to: " + s);
}

std::string decode_strategy_name(DecodeStrategy s) {
    return s == DecodeStrategy::greedy ? "greedy" : "nucleus";
}

DecodeStrategy decode_strategy_from_name(const std::string & s) {
    if (s == "greedy") return DecodeStrategy::greedy;
    if (s == "nucleus") return DecodeStrategy::nucleus;
    throw ValidationError("unknown decode strategy: " + s);
}

bool direction_is_degenerate(double norm, int hidden_dim) {
    return norm < 1e-6 * std::sqrt(static_cast<double>(hidden_dim));
}

std::string RefusalDirection::make_id(std::uint64_t seed, int layer, int position) {
    return "seed" + std::to_string(seed) + "/L" + std::to_string(layer) + "/P" +
           std::to_string(position);
}

void RefusalDirection::finalize() {
    double sq = 0.0;
    for (float v : vector) sq += static_cast<double>(v) * v;
    norm = std::sqrt(sq);
    unit.assign(vector.size(), 0.0f);
    if (norm > 0.0) {
        for (std::size_t i = 0; i < vector.size(); ++i)
            unit[i] = static_cast<float>(vector[i] / norm);
    }
    if (id.empty()) id = make_id(seed, layer, position);
}

void validate_interventions(const std::vector<Intervention> & ivs,
                            const DirectionMap & dirs, int hidden_dim,
                            int n_sites) {
    for (const auto & iv : ivs) {
        if (iv.kind == InterventionKind::none) continue;  // explicit no-op
        auto it = dirs.find(iv.direction_ref);
        if (it == dirs.end())
            throw ValidationError("unresolved direction ref: " + iv.direction_ref);
        const RefusalDirection & d = it->second;
        if (static_cast<int>(d.vector.size()) != hidden_dim)
            throw ValidationError("direction " + iv.direction_ref + " has dim " +
                                  std::to_string(d.vector.size()) + ", backend has " +
                                  std::to_string(hidden_dim));
        if (direction_is_degenerate(d.norm, hidden_dim))
            throw ValidationError("direction " + iv.direction_ref +
                                  " is degenerate (norm " + std::to_string(d.norm) + ")");
        if (iv.kind == InterventionKind::ablation && iv.layer != Intervention::kAllLayers)
            throw ValidationError("ablation must apply at all layers");
        if (iv.kind == InterventionKind::subtraction) {
            if (iv.layer == Intervention::kAllLayers)
                throw ValidationError("subtraction requires a single layer");
            if (iv.layer < 0 || iv.layer >= n_sites)
                throw ValidationError("subtraction layer " + std::to_string(iv.layer) +
                                      " outside [0, " + std::to_string(n_sites) + ")");
        }
    }
}

void DecodeParams::validate() const {
    if (max_new_tokens < 1) throw ValidationError("max_new_tokens must be >= 1");
    if (strategy == DecodeStrategy::nucleus) {
        if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
        if (!(top_p > 0.0) || top_p > 1.0)
            throw ValidationError("top_p must be in (0, 1]");
    }
}

std::size_t ActivationTensor::index(int prompt, int layer, int pos_idx) const {
    return ((static_cast<std::size_t>(prompt) * layer_count + layer) *
                positions.size() +
            pos_idx) *
           hidden_dim;
}

const float * ActivationTensor::at(int prompt, int layer, int pos_idx) const {
    return values.data() + index(prompt, layer, pos_idx);
}

float * ActivationTensor::at(int prompt, int layer, int pos_idx) {
    return values.data() + index(prompt, layer, pos_idx);
}

void ActivationTensor::allocate() {
    values.assign(static_cast<std::size_t>(n_prompts) * layer_count *
                      positions.size() * hidden_dim,
                  0.0f);
}

std::unique_ptr<ModelBackend> make_backend(const json & config,
                                           const Catalogs * catalogs) {
    if (!config.is_object() || !config.contains("kind"))
        throw ValidationError("backend config must be an object with a 'kind'");
    std::string kind = config.at("kind").get<std::string>();
    if (kind == "toy") {
        ToyConfig tc;
        if (config.contains("seed")) tc.seed = config.at("seed").get<std::uint64_t>();
        if (catalogs == nullptr)
            throw ValidationError("toy backend requires catalogs for its lexicon");
        return std::make_unique<ToyBackend>(tc, *catalogs);
    }
    if (kind == "gguf") {
        return make_gguf_backend(config);
    }
    throw ValidationError("unknown backend kind: " + kind);
}

} // namespace sbb
