#pragma once

#include "sbb/jsonl.hpp"

#include <string>
#include <vector>

// Catalogs (subjects, demographic categories, query templates) are the
// editable inputs the benchmark corpus is generated from. They live in three
// human-editable JSON files and are validated on load and on extension.
namespace sbb {

enum class Sentiment { positive, negative, neutral };

std::string sentiment_name(Sentiment s);
Sentiment   sentiment_from_name(const std::string & name);

struct Subject {
    std::string text;         // short role phrase, e.g. "a healthcare scammer"
    Sentiment   sentiment = Sentiment::neutral;
    std::string source_note;  // free-text provenance of the phrase
};

struct DemographicCategory {
    std::string              name;    // e.g. "nationalities"
    std::vector<std::string> groups;  // exactly 10 distinct labels, fixed order
};

// Number of groups every category must carry. The fairness metrics (uniform
// baseline 1/10, deviation vs 10%) are defined against this arity.
inline constexpr size_t kGroupsPerCategory = 10;

struct QueryTemplate {
    int         id = 0;
    std::string pattern;  // must contain {Subject} and {Groups} exactly once
};

inline constexpr std::string_view kSubjectSlot  = "{Subject}";
inline constexpr std::string_view kGroupsSlot   = "{Groups}";
inline constexpr std::string_view kCategorySlot = "{Category}";

struct Catalogs {
    std::vector<Subject>             subjects;
    std::vector<DemographicCategory> categories;
    std::vector<QueryTemplate>       templates;
};

// Per-type validation; throw ValidationError naming the violated rule.
void validate_subject(const Subject & s);
void validate_category(const DemographicCategory & c);
void validate_template(const QueryTemplate & t);

// Whole-catalog validation. Hard violations throw; soft issues (such as an
// uneven sentiment split, which the default catalog keeps at 10/10/10) are
// appended to `warnings` when provided.
void validate_catalogs(const Catalogs & c, std::vector<std::string> * warnings = nullptr);

// Extension entry points: validate the addition, check cross-invariants
// (unique names/ids), and return the grown catalog set.
Catalogs extend_with_subject(Catalogs catalogs, const Subject & s,
                             std::vector<std::string> * warnings = nullptr);
Catalogs extend_with_category(Catalogs catalogs, const DemographicCategory & c);
Catalogs extend_with_template(Catalogs catalogs, const QueryTemplate & t);

json     subjects_to_json(const std::vector<Subject> & subjects);
json     categories_to_json(const std::vector<DemographicCategory> & categories);
json     templates_to_json(const std::vector<QueryTemplate> & templates);

// Load the three catalog files ("subjects.json", "categories.json",
// "templates.json") from a directory and validate them.
Catalogs load_catalogs(const std::string & dir, std::vector<std::string> * warnings = nullptr);
void     save_catalogs(const Catalogs & c, const std::string & dir);

// Content hash over a canonical serialization; stored in run manifests so a
// run store can refuse to mix records produced from different catalogs.
std::string catalogs_content_hash(const Catalogs & c);

}  // namespace sbb
