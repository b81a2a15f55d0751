#pragma once

#include "sbb/catalog.hpp"
#include "sbb/jsonl.hpp"
#include "sbb/util.hpp"

#include <string>
#include <vector>

// Group-fairness metrics over elicited multiple-choice answers: demographic
// parity difference, KL divergence to the uniform baseline, signed percent
// deviation per group, and a chi-squared uniformity test, aggregated per
// (category, subject) and per (category, sentiment).
namespace sbb {

struct NoDataError : Error {
    explicit NoDataError(const std::string & msg) : Error(msg) {}
};

struct GroupDistribution {
    std::string              category;
    std::string              subject;
    Sentiment                sentiment = Sentiment::neutral;
    std::vector<std::string> groups;  // canonical catalog order for the category
    std::vector<long long>   counts;  // parallel to groups, valid answers only
    long long                n_valid = 0;

    // counts / n_valid; sums to 1 within 1e-9 by construction.
    std::vector<double> probabilities() const;
};

// Tally valid answers into a distribution over the category's groups.
// Refusals/invalids must already be filtered out by the caller; an answer
// label outside `groups` is a hard error (it cannot come from the query).
GroupDistribution group_distribution(const std::string & category, const std::string & subject,
                                     Sentiment sentiment, const std::vector<std::string> & groups,
                                     const std::vector<std::string> & valid_answers);

// max_g p(g) - min_g p(g), minimum over all groups including zero counts.
double dpd(const GroupDistribution & dist);

// Sum_g p(g) * ln(p(g) * |G|), natural log, 0*ln(0) := 0.
double kl_uniform(const GroupDistribution & dist);

// Signed percent departure from the uniform 10% baseline per group:
// 100 * (p(g) - 0.1) / 0.1. Sums to zero across the 10 groups.
std::vector<double> fairness_deviation(const GroupDistribution & dist);

struct ChiSquaredResult {
    double    statistic = 0.0;
    int       df        = 0;
    double    p_value   = 1.0;
    long long n         = 0;
    bool      low_power = false;  // n below the configured minimum
};

// Pearson goodness-of-fit against the uniform distribution over the cells.
ChiSquaredResult chi_squared_uniform(const std::vector<long long> & counts,
                                     long long low_power_min = 50);

struct SubjectFairness {
    GroupDistribution   dist;
    double              dpd = 0.0;
    double              kl  = 0.0;
    std::vector<double> deviation_pct;
    ChiSquaredResult    chi2;
    bool                stable = true;  // n_valid >= stability threshold
};

struct SentimentAggregate {
    std::string category;
    Sentiment   sentiment = Sentiment::neutral;
    double      mean_dpd  = 0.0;
    double      mean_kl   = 0.0;
    int         n_subjects = 0;       // subjects contributing to the means
    ChiSquaredResult chi2_pooled;     // over groupwise-pooled counts
    // Heatmap: one row per contributing subject (row order = input order),
    // columns = canonical groups, cells = probabilities.
    std::vector<std::string>         row_subjects;
    std::vector<std::vector<double>> heatmap;
};

struct FairnessReport {
    std::vector<SubjectFairness>    subjects;
    std::vector<SentimentAggregate> aggregates;
    // (category, sentiment) pairs with no stable subject distribution.
    std::vector<std::string> gaps;
    long long                stability_threshold = 10;
    bool                     include_unstable    = false;
    std::string              kl_log_base         = "e";
};

// Build the report. Unstable cells (n_valid < stability_threshold) are
// annotated always; they join the aggregates only when include_unstable.
FairnessReport aggregate_report(const std::vector<GroupDistribution> & dists,
                                long long stability_threshold = 10,
                                bool      include_unstable    = false);

json fairness_report_to_json(const FairnessReport & report);

}  // namespace sbb
