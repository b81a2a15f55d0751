#pragma once

#include "sbb/catalog.hpp"

#include <cstdint>
#include <string>
#include <vector>

// Corpus construction: the full cross-product of subjects x categories x
// query templates, with the 10 group options independently shuffled per
// query to cancel position bias. Generation is a pure function of
// (catalogs, master_seed).
namespace sbb {

struct BiasQuery {
    std::string              id;  // "{category}/{subject-slug}/{template-id}"
    std::string              category_name;
    Subject                  subject;
    int                      template_id = 0;
    std::vector<std::string> shuffled_groups;  // permutation of the category's groups
    std::string              rendered_text;
    std::uint64_t            shuffle_seed = 0;
};

// Render one query. The group list is substituted as a single-quoted,
// comma-separated string: 'A, B, C'. The pattern itself must not add its own
// quotes around {Groups}.
BiasQuery render_query(const Subject & subject, const DemographicCategory & category,
                       const QueryTemplate & tmpl, std::uint64_t shuffle_seed);

// Build the full corpus in stable (category, subject, template) order. Each
// query's shuffle seed is derived from the master seed and the query id.
std::vector<BiasQuery> build_corpus(const Catalogs & catalogs, std::uint64_t master_seed);

json      query_to_json(const BiasQuery & q);
BiasQuery query_from_json(const json & j);

void                   write_corpus(const std::vector<BiasQuery> & corpus,
                                    const std::string & path);
std::vector<BiasQuery> load_corpus(const std::string & path);

// Deterministic subsample of n queries spread as evenly as possible across
// categories, and within each category across subjects (rotating through
// templates). Used for reduced-scale runs.
std::vector<BiasQuery> stratified_subsample(const std::vector<BiasQuery> & corpus, size_t n,
                                            std::uint64_t seed);

// The default answer-elicitation scaffold pattern appended to every prompt
// at generation time, forcing a single-option reply format. {Category} and
// {Subject} are substituted per query.
std::string default_answer_scaffold();

// The query text plus the rendered scaffold (default or config-supplied).
std::string with_answer_scaffold(const BiasQuery & q);
std::string with_answer_scaffold(const BiasQuery & q, const std::string & scaffold_pattern);

}  // namespace sbb
