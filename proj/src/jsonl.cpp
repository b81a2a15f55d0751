#include "sbb/jsonl.hpp"

#include "sbb/util.hpp"

#include <fstream>
#include <sstream>

namespace sbb {

void for_each_jsonl(const std::string & path, const std::function<void(json &&)> & fn,
                    bool * dropped_partial_tail) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open JSONL file: " + path);
    }
    if (dropped_partial_tail) *dropped_partial_tail = false;

    std::string line;
    size_t      line_no = 0;
    // Track whether the previous parse failed; a failure is only fatal if
    // another non-blank line follows it (i.e. it was not the file tail).
    bool   pending_bad = false;
    size_t bad_line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (pending_bad) {
            std::ostringstream msg;
            msg << path << ":" << bad_line_no << ": malformed JSON line in store interior";
            throw IoError(msg.str());
        }
        json parsed = json::parse(t, nullptr, false);
        if (parsed.is_discarded()) {
            pending_bad = true;
            bad_line_no = line_no;
            continue;
        }
        fn(std::move(parsed));
    }
    if (pending_bad && dropped_partial_tail) {
        *dropped_partial_tail = true;
    }
}

JsonlReadResult read_jsonl(const std::string & path) {
    JsonlReadResult result;
    for_each_jsonl(
        path, [&](json && j) { result.records.push_back(std::move(j)); },
        &result.dropped_partial_tail);
    return result;
}

void write_jsonl(const std::string & path, const std::vector<json> & records) {
    std::string out;
    for (const json & j : records) {
        out += j.dump();
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

}  // namespace sbb
