#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sbb {

using json = nlohmann::json;

struct JsonlReadResult {
    std::vector<json> records;
    // True when the file ended in an incomplete line (e.g. a crashed writer);
    // the partial tail is dropped, not surfaced as a record.
    bool dropped_partial_tail = false;
};

// Read a JSON-lines file, skipping blank lines. A malformed *final* line is
// tolerated (interrupted writers leave those); a malformed interior line is
// an error because it means real corruption.
JsonlReadResult read_jsonl(const std::string & path);

void write_jsonl(const std::string & path, const std::vector<json> & records);

// Streaming variant for large stores.
void for_each_jsonl(const std::string & path, const std::function<void(json &&)> & fn,
                    bool * dropped_partial_tail = nullptr);

}  // namespace sbb
