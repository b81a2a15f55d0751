#include "sbb/prompts.hpp"

#include "sbb/jsonl.hpp"
#include "sbb/rng.hpp"
#include "sbb/util.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace sbb {

void PromptSet::validate() const {
    if (prompts.empty()) {
        throw ValidationError("prompt set \"" + name + "\" is empty");
    }
    std::set<std::string> seen;
    for (const std::string & p : prompts) {
        if (trim(p).empty()) {
            throw ValidationError("prompt set \"" + name + "\" contains an empty prompt");
        }
        if (!seen.insert(p).second) {
            throw ValidationError("prompt set \"" + name + "\" contains a duplicate prompt: \"" +
                                  p + "\"");
        }
    }
}

PromptSet load_prompt_set(const std::string & path, const std::string & name) {
    PromptSet set;
    set.name = name;
    if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
        for_each_jsonl(path, [&](json && j) {
            if (j.contains("text")) {
                set.prompts.push_back(j.at("text").get<std::string>());
            } else if (j.contains("prompt")) {
                set.prompts.push_back(j.at("prompt").get<std::string>());
            } else if (j.is_string()) {
                set.prompts.push_back(j.get<std::string>());
            } else {
                throw IoError("prompt line in " + path + " has neither \"text\" nor \"prompt\"");
            }
            if (set.source_note.empty() && j.is_object() && j.contains("source_note")) {
                set.source_note = j.at("source_note").get<std::string>();
            }
        });
    } else {
        std::istringstream in(read_text_file(path));
        std::string        line;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (!t.empty()) set.prompts.push_back(t);
        }
    }
    set.validate();
    return set;
}

PromptSet load_named_pool(const std::string & data_dir, const std::string & name) {
    static const std::set<std::string> known = {"harmful-train", "harmless-train", "harmful-val",
                                                "harmless-val"};
    if (!known.count(name)) {
        throw ValidationError("unknown pool name \"" + name +
                              "\" (expected harmful-train|harmless-train|harmful-val|harmless-val)");
    }
    std::string file = replace_all(name, "-", "_") + ".jsonl";
    return load_prompt_set(data_dir + "/pools/" + file, name);
}

PromptSet subsample(const PromptSet & set, size_t n, std::uint64_t seed) {
    set.validate();
    if (n == 0 || n > set.prompts.size()) {
        std::ostringstream msg;
        msg << "cannot subsample " << n << " prompts from \"" << set.name << "\" of size "
            << set.prompts.size();
        throw ValidationError(msg.str());
    }
    std::vector<size_t> order(set.prompts.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    order.resize(n);
    std::sort(order.begin(), order.end());  // keep original relative order

    PromptSet out;
    out.name        = set.name;
    out.source_note = set.source_note;
    out.prompts.reserve(n);
    for (size_t ix : order) out.prompts.push_back(set.prompts[ix]);
    return out;
}

}  // namespace sbb
