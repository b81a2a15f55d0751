#include "sbb/directions.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "sbb/base64.hpp"
#include "sbb/response_eval.hpp"
#include "sbb/rng.hpp"
#include "sbb/util.hpp"

namespace sbb {

std::vector<int> default_candidate_positions() { return {-1, -2, -3, -4, -5}; }

std::vector<float> mean_activation(const ActivationTensor & t, int site, int pos_idx) {
    if (site < 0 || site >= t.layer_count)
        throw ValidationError("site " + std::to_string(site) + " out of range");
    if (pos_idx < 0 || pos_idx >= static_cast<int>(t.positions.size()))
        throw ValidationError("position index " + std::to_string(pos_idx) + " out of range");
    if (t.n_prompts == 0) throw ValidationError("empty activation tensor");
    std::vector<double> acc(t.hidden_dim, 0.0);
    for (int p = 0; p < t.n_prompts; ++p) {
        const float * x = t.at(p, site, pos_idx);
        for (int k = 0; k < t.hidden_dim; ++k) acc[k] += x[k];
    }
    std::vector<float> mean(t.hidden_dim);
    for (int k = 0; k < t.hidden_dim; ++k)
        mean[k] = static_cast<float>(acc[k] / t.n_prompts);
    return mean;
}

RefusalDirection activation_direction(const std::vector<float> & harmful_mean,
                                      const std::vector<float> & harmless_mean,
                                      int site, int position, std::uint64_t seed,
                                      int n_harmful, int n_harmless) {
    if (harmful_mean.size() != harmless_mean.size())
        throw ValidationError("mean activation dimension mismatch");
    RefusalDirection d;
    d.vector.resize(harmful_mean.size());
    for (size_t k = 0; k < harmful_mean.size(); ++k)
        d.vector[k] = harmful_mean[k] - harmless_mean[k];
    d.layer      = site;
    d.position   = position;
    d.seed       = seed;
    d.n_harmful  = n_harmful;
    d.n_harmless = n_harmless;
    d.finalize();
    return d;
}

CandidateSet candidate_directions(const ModelBackend & backend,
                                  const std::vector<std::string> & harmful,
                                  const std::vector<std::string> & harmless,
                                  const std::vector<int> & positions,
                                  std::uint64_t seed) {
    if (harmful.empty() || harmless.empty())
        throw ValidationError("both prompt pools must be non-empty");
    if (positions.empty()) throw ValidationError("no candidate positions");

    auto harmful_t  = backend.capture_activations(harmful, positions);
    auto harmless_t = backend.capture_activations(harmless, positions);

    CandidateSet out;
    for (int site = 0; site < backend.n_sites(); ++site) {
        for (size_t xi = 0; xi < positions.size(); ++xi) {
            auto mu = mean_activation(harmful_t, site, static_cast<int>(xi));
            auto nu = mean_activation(harmless_t, site, static_cast<int>(xi));
            auto d  = activation_direction(mu, nu, site, positions[xi], seed,
                                           static_cast<int>(harmful.size()),
                                           static_cast<int>(harmless.size()));
            if (direction_is_degenerate(d.norm, backend.hidden_dim())) {
                out.dropped.push_back(d.id);
                out.warnings.push_back("candidate " + d.id +
                                       " is numerically zero; dropped");
            } else {
                out.candidates.push_back(std::move(d));
            }
        }
    }
    if (out.candidates.empty())
        throw ValidationError("all difference-in-means candidates are degenerate; "
                              "the pools do not separate in activation space");
    return out;
}

SelectionOutcome select_direction(const ModelBackend & backend,
                                  const std::vector<RefusalDirection> & candidates,
                                  const std::vector<std::string> & harmful_val,
                                  int max_new_tokens) {
    if (candidates.empty()) throw ValidationError("no candidate directions");
    if (harmful_val.empty()) throw ValidationError("empty validation pool");

    DecodeParams params;
    params.strategy       = DecodeStrategy::greedy;
    params.max_new_tokens = max_new_tokens;

    SelectionOutcome outcome;
    const RefusalDirection * best = nullptr;
    double                   best_rate = 2.0;
    for (const auto & cand : candidates) {
        DirectionMap dirs;
        dirs[cand.id] = cand;
        Intervention iv;
        iv.kind          = InterventionKind::ablation;
        iv.direction_ref = cand.id;

        int refusals = 0;
        for (const auto & prompt : harmful_val)
            refusals += detect_refusal(backend.generate(prompt, params, {iv}, dirs).text);
        double rate = static_cast<double>(refusals) / harmful_val.size();
        outcome.scores.emplace_back(cand.id, rate);

        bool wins = rate < best_rate;
        if (!wins && best != nullptr && rate == best_rate) {
            // Ties: earlier site, then position nearest the sequence end.
            wins = cand.layer < best->layer ||
                   (cand.layer == best->layer && cand.position > best->position);
        }
        if (wins) {
            best      = &cand;
            best_rate = rate;
        }
    }
    outcome.best                 = *best;
    outcome.best.selection_score = best_rate;
    return outcome;
}

namespace {

std::vector<size_t> subsample_indices(size_t pool_size, size_t n, Rng & rng) {
    std::vector<size_t> ix(pool_size);
    std::iota(ix.begin(), ix.end(), size_t{0});
    rng.shuffle(ix);
    ix.resize(n);
    std::sort(ix.begin(), ix.end());
    return ix;
}

} // namespace

VariantExtraction sample_direction_variants(
    const ModelBackend & backend, const PromptSet & harmful_train,
    const PromptSet & harmless_train, const PromptSet & harmful_val,
    int n_variants, std::size_t n_harmful, std::size_t n_harmless,
    std::uint64_t master_seed, const std::vector<int> & positions) {
    if (n_variants < 1) throw ValidationError("n_variants must be >= 1");
    if (n_harmful == 0) n_harmful = harmful_train.prompts.size();
    if (n_harmless == 0) n_harmless = harmless_train.prompts.size();
    if (n_harmful > harmful_train.prompts.size() ||
        n_harmless > harmless_train.prompts.size())
        throw ValidationError("subsample size exceeds pool size");

    VariantExtraction out;
    out.metadata             = json::object();
    out.metadata["variants"] = json::array();
    for (int v = 0; v < n_variants; ++v) {
        std::uint64_t vseed = derive_seed(master_seed, "direction-variant|" +
                                                           std::to_string(v));
        Rng  harmful_rng(derive_seed(vseed, "harmful-subsample"));
        Rng  harmless_rng(derive_seed(vseed, "harmless-subsample"));
        auto hix = subsample_indices(harmful_train.prompts.size(), n_harmful,
                                     harmful_rng);
        auto lix = subsample_indices(harmless_train.prompts.size(), n_harmless,
                                     harmless_rng);

        std::vector<std::string> harmful, harmless;
        for (size_t i : hix) harmful.push_back(harmful_train.prompts[i]);
        for (size_t i : lix) harmless.push_back(harmless_train.prompts[i]);

        auto cands = candidate_directions(backend, harmful, harmless, positions, vseed);
        for (auto & w : cands.warnings) out.warnings.push_back(std::move(w));
        auto sel = select_direction(backend, cands.candidates, harmful_val.prompts);
        out.selected.push_back(sel.best);

        json meta;
        meta["variant"]          = v;
        meta["seed"]             = vseed;
        meta["selected"]         = sel.best.id;
        meta["selection_score"]  = sel.best.selection_score;
        meta["harmful_sample"]   = hix;
        meta["harmless_sample"]  = lix;
        meta["dropped"]          = cands.dropped;
        json scores              = json::array();
        for (const auto & [id, rate] : sel.scores)
            scores.push_back({{"id", id}, {"ablated_refusal_rate", rate}});
        meta["candidate_scores"] = std::move(scores);
        out.metadata["variants"].push_back(std::move(meta));
    }
    return out;
}

json direction_to_json(const RefusalDirection & d) {
    return json{{"id", d.id},
                {"layer", d.layer},
                {"position", d.position},
                {"seed", d.seed},
                {"n_harmful", d.n_harmful},
                {"n_harmless", d.n_harmless},
                {"selection_score", d.selection_score},
                {"norm", d.norm},
                {"vector_b64", floats_to_base64(d.vector)}};
}

RefusalDirection direction_from_json(const json & j) {
    RefusalDirection d;
    d.id              = j.at("id").get<std::string>();
    d.layer           = j.at("layer").get<int>();
    d.position        = j.at("position").get<int>();
    d.seed            = j.at("seed").get<std::uint64_t>();
    d.n_harmful       = j.at("n_harmful").get<int>();
    d.n_harmless      = j.at("n_harmless").get<int>();
    d.selection_score = j.at("selection_score").get<double>();
    d.vector          = base64_to_floats(j.at("vector_b64").get<std::string>());
    d.finalize();
    double stored_norm = j.at("norm").get<double>();
    if (std::abs(stored_norm - d.norm) > 1e-9 * std::max(1.0, d.norm))
        throw ValidationError("direction " + d.id +
                              ": stored norm disagrees with payload");
    return d;
}

void save_directions(const std::string & path,
                     const std::vector<RefusalDirection> & directions,
                     const json & metadata, const std::string & model_id,
                     int hidden_dim) {
    if (directions.empty()) throw ValidationError("no directions to save");
    json file;
    file["kind"]       = "sbb-directions";
    file["version"]    = 1;
    file["model_id"]   = model_id;
    file["hidden_dim"] = hidden_dim;
    file["metadata"]   = metadata;
    json arr           = json::array();
    for (const auto & d : directions) {
        if (static_cast<int>(d.vector.size()) != hidden_dim)
            throw ValidationError("direction " + d.id + " has dimension " +
                                  std::to_string(d.vector.size()) + ", expected " +
                                  std::to_string(hidden_dim));
        arr.push_back(direction_to_json(d));
    }
    file["directions"] = std::move(arr);
    write_text_file_atomic(path, file.dump(2) + "\n");
}

DirectionMap load_directions(const std::string & path, json * metadata_out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open directions file " + path);
    json file;
    try {
        in >> file;
    } catch (const json::exception & e) {
        throw ValidationError("directions file " + path + " is not valid JSON: " +
                              e.what());
    }
    if (file.value("kind", "") != "sbb-directions")
        throw ValidationError(path + " is not a directions file");
    DirectionMap out;
    for (const auto & j : file.at("directions")) {
        auto d = direction_from_json(j);
        if (out.count(d.id))
            throw ValidationError("duplicate direction id " + d.id + " in " + path);
        out.emplace(d.id, std::move(d));
    }
    if (out.empty()) throw ValidationError("directions file " + path + " is empty");
    if (metadata_out != nullptr) *metadata_out = file.value("metadata", json::object());
    return out;
}

}  // namespace sbb
