#include "sbb/catalog.hpp"

#include "sbb/util.hpp"

#include <set>
#include <sstream>

namespace sbb {

std::string sentiment_name(Sentiment s) {
    switch (s) {
        case Sentiment::positive: return "positive";
        case Sentiment::negative: return "negative";
        case Sentiment::neutral: return "neutral";
    }
    throw Error("unreachable sentiment value");
}

Sentiment sentiment_from_name(const std::string & name) {
    if (name == "positive") return Sentiment::positive;
    if (name == "negative") return Sentiment::negative;
    if (name == "neutral") return Sentiment::neutral;
    throw ValidationError("unknown sentiment: \"" + name +
                          "\" (expected positive|negative|neutral)");
}

void validate_subject(const Subject & s) {
    if (trim(s.text).empty()) {
        throw ValidationError("subject text must be non-empty");
    }
}

void validate_category(const DemographicCategory & c) {
    if (trim(c.name).empty()) {
        throw ValidationError("category name must be non-empty");
    }
    if (c.groups.size() != kGroupsPerCategory) {
        std::ostringstream msg;
        msg << "category \"" << c.name << "\" must have exactly " << kGroupsPerCategory
            << " groups, got " << c.groups.size();
        throw ValidationError(msg.str());
    }
    std::set<std::string> seen;
    for (const std::string & g : c.groups) {
        if (trim(g).empty()) {
            throw ValidationError("category \"" + c.name + "\" has an empty group label");
        }
        if (!seen.insert(to_lower(g)).second) {
            throw ValidationError("category \"" + c.name + "\" has duplicate group label \"" + g +
                                  "\" (labels must be distinct after case-folding)");
        }
    }
}

void validate_template(const QueryTemplate & t) {
    const size_t n_subject = count_occurrences(t.pattern, kSubjectSlot);
    const size_t n_groups  = count_occurrences(t.pattern, kGroupsSlot);
    if (n_subject != 1 || n_groups != 1) {
        std::ostringstream msg;
        msg << "template " << t.id << " must contain " << kSubjectSlot << " and " << kGroupsSlot
            << " exactly once each (found " << n_subject << " and " << n_groups << ")";
        throw ValidationError(msg.str());
    }
}

void validate_catalogs(const Catalogs & c, std::vector<std::string> * warnings) {
    if (c.subjects.empty()) throw ValidationError("subject catalog is empty");
    if (c.categories.empty()) throw ValidationError("category catalog is empty");
    if (c.templates.empty()) throw ValidationError("template catalog is empty");

    size_t counts[3] = {0, 0, 0};
    std::set<std::string> subject_slugs;
    for (const Subject & s : c.subjects) {
        validate_subject(s);
        counts[static_cast<int>(s.sentiment)]++;
        if (!subject_slugs.insert(slugify(s.text)).second) {
            throw ValidationError("duplicate subject (same slug): \"" + s.text + "\"");
        }
    }
    std::set<std::string> category_names;
    for (const DemographicCategory & cat : c.categories) {
        validate_category(cat);
        if (!category_names.insert(cat.name).second) {
            throw ValidationError("duplicate category name: \"" + cat.name + "\"");
        }
    }
    std::set<int> template_ids;
    for (const QueryTemplate & t : c.templates) {
        validate_template(t);
        if (!template_ids.insert(t.id).second) {
            throw ValidationError("duplicate template id: " + std::to_string(t.id));
        }
    }

    if (warnings && !(counts[0] == counts[1] && counts[1] == counts[2])) {
        std::ostringstream msg;
        msg << "subject sentiments are unbalanced: positive=" << counts[0]
            << " negative=" << counts[1] << " neutral=" << counts[2]
            << " (sentiment-level aggregates will average unequal sample sizes)";
        warnings->push_back(msg.str());
    }
}

Catalogs extend_with_subject(Catalogs catalogs, const Subject & s,
                             std::vector<std::string> * warnings) {
    validate_subject(s);
    catalogs.subjects.push_back(s);
    validate_catalogs(catalogs, warnings);
    return catalogs;
}

Catalogs extend_with_category(Catalogs catalogs, const DemographicCategory & c) {
    validate_category(c);
    catalogs.categories.push_back(c);
    validate_catalogs(catalogs);
    return catalogs;
}

Catalogs extend_with_template(Catalogs catalogs, const QueryTemplate & t) {
    validate_template(t);
    catalogs.templates.push_back(t);
    validate_catalogs(catalogs);
    return catalogs;
}

json subjects_to_json(const std::vector<Subject> & subjects) {
    json arr = json::array();
    for (const Subject & s : subjects) {
        arr.push_back({{"text", s.text},
                       {"sentiment", sentiment_name(s.sentiment)},
                       {"source_note", s.source_note}});
    }
    return json{{"subjects", arr}};
}

json categories_to_json(const std::vector<DemographicCategory> & categories) {
    json arr = json::array();
    for (const DemographicCategory & c : categories) {
        arr.push_back({{"name", c.name}, {"groups", c.groups}});
    }
    return json{{"categories", arr}};
}

json templates_to_json(const std::vector<QueryTemplate> & templates) {
    json arr = json::array();
    for (const QueryTemplate & t : templates) {
        arr.push_back({{"id", t.id}, {"pattern", t.pattern}});
    }
    return json{{"templates", arr}};
}

static json load_json_file(const std::string & path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw IoError("malformed JSON in " + path);
    }
    return j;
}

Catalogs load_catalogs(const std::string & dir, std::vector<std::string> * warnings) {
    Catalogs out;

    json subjects = load_json_file(dir + "/subjects.json");
    for (const json & s : subjects.at("subjects")) {
        out.subjects.push_back(Subject{
            s.at("text").get<std::string>(),
            sentiment_from_name(s.at("sentiment").get<std::string>()),
            s.value("source_note", ""),
        });
    }

    json categories = load_json_file(dir + "/categories.json");
    for (const json & c : categories.at("categories")) {
        out.categories.push_back(DemographicCategory{
            c.at("name").get<std::string>(),
            c.at("groups").get<std::vector<std::string>>(),
        });
    }

    json templates = load_json_file(dir + "/templates.json");
    for (const json & t : templates.at("templates")) {
        out.templates.push_back(QueryTemplate{
            t.at("id").get<int>(),
            t.at("pattern").get<std::string>(),
        });
    }

    validate_catalogs(out, warnings);
    return out;
}

void save_catalogs(const Catalogs & c, const std::string & dir) {
    ensure_dir(dir);
    write_text_file_atomic(dir + "/subjects.json", subjects_to_json(c.subjects).dump(2) + "\n");
    write_text_file_atomic(dir + "/categories.json",
                           categories_to_json(c.categories).dump(2) + "\n");
    write_text_file_atomic(dir + "/templates.json",
                           templates_to_json(c.templates).dump(2) + "\n");
}

std::string catalogs_content_hash(const Catalogs & c) {
    // Canonical form: compact dumps concatenated in a fixed order. nlohmann
    // preserves insertion order, which is fixed by the *_to_json builders.
    std::string canon = subjects_to_json(c.subjects).dump() + "\n" +
                        categories_to_json(c.categories).dump() + "\n" +
                        templates_to_json(c.templates).dump();
    return hex_u64(fnv1a64(canon));
}

}  // namespace sbb
