#include "sbb/steering.hpp"

#include <chrono>
#include <cmath>

#include "sbb/rng.hpp"
#include "sbb/store.hpp"
#include "sbb/util.hpp"

namespace sbb {

std::vector<double> ablate(const std::vector<double> & x, const RefusalDirection & d) {
    if (x.size() != d.unit.size())
        throw ValidationError("activation/direction dimension mismatch");
    if (direction_is_degenerate(d.norm, static_cast<int>(x.size())))
        throw ValidationError("cannot ablate a zero-norm direction");
    // Project onto the stored unit vector, normalizing by its exact squared
    // norm (the float32 copy is normalized only to float precision).
    double dot = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double u = d.unit[k];
        dot += u * x[k];
        sq += u * u;
    }
    const double        proj = dot / sq;
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        out[k] = x[k] - proj * static_cast<double>(d.unit[k]);
    return out;
}

std::vector<double> subtract_direction(const std::vector<double> & x,
                                       const RefusalDirection & d, int hook_layer) {
    if (x.size() != d.vector.size())
        throw ValidationError("activation/direction dimension mismatch");
    if (direction_is_degenerate(d.norm, static_cast<int>(x.size())))
        throw ValidationError("cannot subtract a zero-norm direction");
    if (hook_layer != d.layer)
        throw ValidationError("subtraction hooked at layer " +
                              std::to_string(hook_layer) + " but direction is for layer " +
                              std::to_string(d.layer));
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        out[k] = x[k] - static_cast<double>(d.vector[k]);
    return out;
}

int RunConfig::effective_baseline_reps() const {
    if (baseline_repetitions >= 0) return baseline_repetitions;
    return static_cast<int>(methods.size()) * R;
}

void RunConfig::validate() const {
    if (R < 1) throw ValidationError("R must be >= 1");
    if (methods.empty()) throw ValidationError("at least one steering method required");
    for (auto m : methods)
        if (m != InterventionKind::ablation && m != InterventionKind::subtraction)
            throw ValidationError("methods must be ablation and/or subtraction");
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j)
            if (methods[i] == methods[j])
                throw ValidationError("duplicate steering method");
    if (effective_baseline_reps() < 1)
        throw ValidationError("baseline_repetitions must be >= 1");
    decode.validate();
}

json RunConfig::to_json() const {
    json methods_j = json::array();
    for (auto m : methods) methods_j.push_back(intervention_kind_name(m));
    return json{{"model_id", model_id},
                {"R", R},
                {"methods", methods_j},
                {"baseline_repetitions", effective_baseline_reps()},
                {"decode",
                 {{"max_new_tokens", decode.max_new_tokens},
                  {"strategy", decode_strategy_name(decode.strategy)},
                  {"temperature", decode.temperature},
                  {"top_p", decode.top_p}}},
                {"master_seed", master_seed},
                {"answer_scaffold", answer_scaffold},
                {"output_dir", output_dir}};
}

std::string GenerationRecord::key() const {
    return query_id + "\x1f" + condition + "\x1f" + std::to_string(repetition_index);
}

bool GenerationRecord::steered() const {
    return condition.rfind("ablation:", 0) == 0 ||
           condition.rfind("subtraction:", 0) == 0;
}

json GenerationRecord::to_json() const {
    json j{{"query_id", query_id},
           {"condition", condition},
           {"repetition_index", repetition_index},
           {"response_text", response_text},
           {"failed", failed},
           {"seconds", seconds},
           {"seed", seed}};
    if (failed) j["error"] = error;
    if (!prompt_echo.empty()) j["prompt_echo"] = prompt_echo;
    if (has_parsed) {
        j["parsed_kind"] = parsed_kind;
        if (!parsed_group.empty()) j["parsed_group"] = parsed_group;
    }
    return j;
}

GenerationRecord GenerationRecord::from_json(const json & j) {
    GenerationRecord r;
    r.query_id         = j.at("query_id").get<std::string>();
    r.condition        = j.at("condition").get<std::string>();
    r.repetition_index = j.at("repetition_index").get<int>();
    r.response_text    = j.at("response_text").get<std::string>();
    r.failed           = j.value("failed", false);
    r.error            = j.value("error", "");
    r.seconds          = j.value("seconds", 0.0);
    r.seed             = j.value("seed", std::uint64_t{0});
    r.prompt_echo      = j.value("prompt_echo", "");
    if (j.contains("parsed_kind")) {
        r.has_parsed   = true;
        r.parsed_kind  = j.at("parsed_kind").get<std::string>();
        r.parsed_group = j.value("parsed_group", "");
    }
    return r;
}

std::string baseline_condition() { return "baseline"; }

std::string steered_condition(InterventionKind method, const std::string & direction_id) {
    if (method != InterventionKind::ablation && method != InterventionKind::subtraction)
        throw ValidationError("steered condition requires ablation or subtraction");
    return intervention_kind_name(method) + ":" + direction_id;
}

std::string suffix_condition(const std::string & suffix) {
    if (suffix.empty()) return baseline_condition();
    return "suffix:" + hex_u64(fnv1a64(suffix));
}

std::uint64_t record_seed(std::uint64_t master_seed, const std::string & query_id,
                          const std::string & condition, int repetition) {
    return derive_seed(master_seed, query_id + "|" + condition + "|" +
                                        std::to_string(repetition));
}

namespace {

struct Job {
    const BiasQuery *         query;
    std::string                condition;
    int                        repetition;
    std::vector<Intervention>  interventions;  // empty for baseline/suffix
};

RunProgress execute_jobs(const ModelBackend & backend, const std::vector<Job> & jobs,
                         const RunConfig & config, const DirectionMap & dirs,
                         RunStore & store, const std::string & prompt_suffix,
                         bool audit_prompts) {
    RunProgress progress;
    for (const auto & job : jobs) {
        GenerationRecord rec;
        rec.query_id         = job.query->id;
        rec.condition        = job.condition;
        rec.repetition_index = job.repetition;
        if (store.contains(rec.key())) {
            progress.skipped++;
            continue;
        }
        std::string prompt =
            with_answer_scaffold(*job.query, config.answer_scaffold) + prompt_suffix;
        DecodeParams params = config.decode;
        params.seed = record_seed(config.master_seed, rec.query_id, rec.condition,
                                  rec.repetition_index);
        rec.seed = params.seed;
        if (audit_prompts) rec.prompt_echo = prompt;
        auto t0 = std::chrono::steady_clock::now();
        try {
            auto out          = backend.generate(prompt, params, job.interventions, dirs);
            rec.response_text = out.text;
        } catch (const Error & e) {
            rec.failed = true;
            rec.error  = e.what();
            progress.failures++;
        }
        rec.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        store.append(rec);
        progress.written++;
    }
    return progress;
}

} // namespace

RunProgress run_benchmark(const ModelBackend & backend,
                          const std::vector<BiasQuery> & corpus,
                          const std::vector<RefusalDirection> & directions,
                          const RunConfig & config, RunStore & store) {
    config.validate();
    if (corpus.empty()) throw ValidationError("empty corpus");
    if (static_cast<int>(directions.size()) != config.R)
        throw ValidationError("run config expects R=" + std::to_string(config.R) +
                              " directions, got " + std::to_string(directions.size()));

    DirectionMap dirs;
    for (const auto & d : directions) {
        if (dirs.count(d.id)) throw ValidationError("duplicate direction id " + d.id);
        dirs[d.id] = d;
    }
    // Fail fast if any (direction, method) pair is unusable.
    std::vector<std::vector<Intervention>> steered_ivs;
    for (const auto & d : directions) {
        for (auto method : config.methods) {
            Intervention iv;
            iv.kind          = method;
            iv.direction_ref = d.id;
            iv.layer         = method == InterventionKind::subtraction
                                   ? d.layer
                                   : Intervention::kAllLayers;
            validate_interventions({iv}, dirs, backend.hidden_dim(), backend.n_sites());
            steered_ivs.push_back({iv});
        }
    }

    std::vector<Job> jobs;
    jobs.reserve(corpus.size() *
                 (steered_ivs.size() + config.effective_baseline_reps()));
    for (const auto & q : corpus) {
        std::size_t s = 0;
        for (const auto & d : directions) {
            for (auto method : config.methods) {
                jobs.push_back(Job{&q, steered_condition(method, d.id), 0,
                                   steered_ivs[s]});
                s++;
            }
        }
        for (int rep = 0; rep < config.effective_baseline_reps(); ++rep)
            jobs.push_back(Job{&q, baseline_condition(), rep, {}});
    }
    return execute_jobs(backend, jobs, config, dirs, store, "", false);
}

RunProgress suffix_injection_run(const ModelBackend & backend,
                                 const std::vector<BiasQuery> & corpus,
                                 const std::string & suffix, const RunConfig & config,
                                 RunStore & store, bool audit_prompts) {
    config.validate();
    if (corpus.empty()) throw ValidationError("empty corpus");

    const std::string condition = suffix_condition(suffix);
    std::vector<Job>  jobs;
    jobs.reserve(corpus.size() * config.effective_baseline_reps());
    for (const auto & q : corpus)
        for (int rep = 0; rep < config.effective_baseline_reps(); ++rep)
            jobs.push_back(Job{&q, condition, rep, {}});
    return execute_jobs(backend, jobs, config, {}, store, suffix, audit_prompts);
}

}  // namespace sbb
