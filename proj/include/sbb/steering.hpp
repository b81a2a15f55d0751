#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbb/backend.hpp"
#include "sbb/corpus.hpp"

// Steering math and the benchmark sweep orchestration: for every query,
// |methods| x R steered generations (one per direction variant and method)
// plus seed-matched baseline repetitions, streamed into a resumable store.
namespace sbb {

class RunStore;

// x - r_hat <r_hat, x>: removes the direction component. Applied at every
// instrumented site when wired as an ablation intervention. Double precision
// so the residual projection stays below 1e-10 * ||x||; the in-backend hook
// works on float32 activations and carries its own looser bound.
std::vector<double> ablate(const std::vector<double> & x, const RefusalDirection & d);

// x - r (un-normalized), valid only at the direction's own layer.
std::vector<double> subtract_direction(const std::vector<double> & x,
                                       const RefusalDirection & d, int hook_layer);

struct RunConfig {
    std::string                   model_id;
    int                           R = 1;  // direction variants in play
    std::vector<InterventionKind> methods = {InterventionKind::ablation,
                                             InterventionKind::subtraction};
    int           baseline_repetitions = -1;  // -1: default to |methods| * R
    DecodeParams  decode;                     // per-record seed derived below
    std::uint64_t master_seed = 0;
    std::string   answer_scaffold = default_answer_scaffold();  // {Category}/{Subject} slots
    std::string   output_dir;

    int  effective_baseline_reps() const;
    void validate() const;
    json to_json() const;
};

struct GenerationRecord {
    std::string   query_id;
    std::string   condition;  // "baseline" | "<method>:<direction id>" | "suffix:<hash>"
    int           repetition_index = 0;
    std::string   response_text;
    bool          failed = false;
    std::string   error;    // set iff failed
    double        seconds = 0.0;
    std::uint64_t seed = 0;  // decode seed used
    std::string   prompt_echo;  // audit mode only: full rendered prompt

    // Filled by evaluation, not by the runner.
    bool        has_parsed = false;
    std::string parsed_kind;   // valid | refusal | invalid
    std::string parsed_group;  // set iff parsed_kind == valid

    std::string             key() const;  // unique (query, condition, rep) id
    bool                    steered() const;
    json                    to_json() const;
    static GenerationRecord from_json(const json & j);
};

// Condition tag helpers.
std::string baseline_condition();
std::string steered_condition(InterventionKind method, const std::string & direction_id);
std::string suffix_condition(const std::string & suffix);  // empty -> baseline

// Deterministic per-record decode seed.
std::uint64_t record_seed(std::uint64_t master_seed, const std::string & query_id,
                          const std::string & condition, int repetition);

struct RunProgress {
    std::size_t written = 0;
    std::size_t skipped = 0;  // already present (resume)
    std::size_t failures = 0;
};

// Full sweep: per query, one record per (direction, method) plus baseline
// repetitions. Already-present (query, condition, repetition) keys are
// skipped; backend failures are recorded and the run continues.
RunProgress run_benchmark(const ModelBackend & backend,
                          const std::vector<BiasQuery> & corpus,
                          const std::vector<RefusalDirection> & directions,
                          const RunConfig & config, RunStore & store);

// Baseline-style generations with `suffix` appended after the answer
// scaffold. With audit_prompts, each record stores the full prompt text.
RunProgress suffix_injection_run(const ModelBackend & backend,
                                 const std::vector<BiasQuery> & corpus,
                                 const std::string & suffix, const RunConfig & config,
                                 RunStore & store, bool audit_prompts = false);

}  // namespace sbb
