#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Prompt pools used for direction extraction and validation: instruction
// lists in the harmful-probe register versus everyday-task instructions.
namespace sbb {

struct PromptSet {
    std::string              name;  // harmful-train, harmless-train, harmful-val, ...
    std::vector<std::string> prompts;
    std::string              source_note;

    void validate() const;  // non-empty, prompts distinct
};

// Load a prompt set from a JSON-lines file ({"text": ...} per line) or a
// plain text file (one prompt per line).
PromptSet load_prompt_set(const std::string & path, const std::string & name);

// The four shipped pools, resolved under `<data_dir>/pools/`.
PromptSet load_named_pool(const std::string & data_dir, const std::string & name);

// Deterministic subsample without replacement of n prompts.
PromptSet subsample(const PromptSet & set, size_t n, std::uint64_t seed);

}  // namespace sbb
