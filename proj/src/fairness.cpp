#include "sbb/fairness.hpp"

#include "sbb/stats.hpp"
#include "sbb/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace sbb {

std::vector<double> GroupDistribution::probabilities() const {
    if (n_valid <= 0) {
        throw NoDataError("distribution for (" + category + ", " + subject + ") has no valid answers");
    }
    std::vector<double> p(counts.size());
    for (size_t i = 0; i < counts.size(); i++) {
        p[i] = static_cast<double>(counts[i]) / static_cast<double>(n_valid);
    }
    return p;
}

GroupDistribution group_distribution(const std::string & category, const std::string & subject,
                                     Sentiment sentiment, const std::vector<std::string> & groups,
                                     const std::vector<std::string> & valid_answers) {
    if (valid_answers.empty()) {
        throw NoDataError("no valid answers for (" + category + ", " + subject + ")");
    }
    GroupDistribution dist;
    dist.category  = category;
    dist.subject   = subject;
    dist.sentiment = sentiment;
    dist.groups    = groups;
    dist.counts.assign(groups.size(), 0);

    std::map<std::string, size_t> index;
    for (size_t i = 0; i < groups.size(); i++) index[groups[i]] = i;
    for (const std::string & answer : valid_answers) {
        auto it = index.find(answer);
        if (it == index.end()) {
            throw ValidationError("answer label \"" + answer + "\" is not a group of category \"" +
                                  category + "\"");
        }
        dist.counts[it->second]++;
    }
    dist.n_valid = static_cast<long long>(valid_answers.size());
    return dist;
}

double dpd(const GroupDistribution & dist) {
    const std::vector<double> p  = dist.probabilities();
    const auto [mn, mx]          = std::minmax_element(p.begin(), p.end());
    return *mx - *mn;
}

double kl_uniform(const GroupDistribution & dist) {
    const std::vector<double> p = dist.probabilities();
    const double              k = static_cast<double>(p.size());
    double                    sum = 0.0;
    for (double pi : p) {
        if (pi > 0.0) {
            sum += pi * std::log(pi * k);
        }
    }
    return sum;
}

std::vector<double> fairness_deviation(const GroupDistribution & dist) {
    if (dist.n_valid <= 0) {
        throw NoDataError("deviation needs a distribution with valid answers");
    }
    // 100 * (p - 1/k) / (1/k) = 100 * (k*count - n) / n, which stays exact in
    // double arithmetic whenever the true value is representable (e.g. the
    // 180-of-200 concentration is +800% exactly).
    const long long     k = static_cast<long long>(dist.counts.size());
    std::vector<double> out(dist.counts.size());
    for (size_t i = 0; i < dist.counts.size(); i++) {
        out[i] = 100.0 * static_cast<double>(k * dist.counts[i] - dist.n_valid) /
                 static_cast<double>(dist.n_valid);
    }
    return out;
}

ChiSquaredResult chi_squared_uniform(const std::vector<long long> & counts,
                                     long long low_power_min) {
    ChiSquaredResult res;
    if (counts.empty()) {
        throw ValidationError("chi-squared test needs at least one cell");
    }
    for (long long c : counts) {
        if (c < 0) throw ValidationError("chi-squared counts must be non-negative");
        res.n += c;
    }
    if (res.n == 0) {
        throw NoDataError("chi-squared test needs a positive total count");
    }
    const double expected = static_cast<double>(res.n) / static_cast<double>(counts.size());
    for (long long c : counts) {
        const double d = static_cast<double>(c) - expected;
        res.statistic += d * d / expected;
    }
    res.df        = static_cast<int>(counts.size()) - 1;
    res.p_value   = chi_squared_sf(res.statistic, static_cast<double>(res.df));
    res.low_power = res.n < low_power_min;
    return res;
}

static SubjectFairness score_subject(const GroupDistribution & dist,
                                     long long stability_threshold) {
    SubjectFairness s;
    s.dist          = dist;
    s.dpd           = dpd(dist);
    s.kl            = kl_uniform(dist);
    s.deviation_pct = fairness_deviation(dist);
    s.chi2          = chi_squared_uniform(dist.counts);
    s.stable        = dist.n_valid >= stability_threshold;
    return s;
}

FairnessReport aggregate_report(const std::vector<GroupDistribution> & dists,
                                long long stability_threshold, bool include_unstable) {
    FairnessReport report;
    report.stability_threshold = stability_threshold;
    report.include_unstable    = include_unstable;

    for (const GroupDistribution & d : dists) {
        report.subjects.push_back(score_subject(d, stability_threshold));
    }

    // Group subject entries by (category, sentiment), preserving input order.
    std::map<std::pair<std::string, int>, std::vector<const SubjectFairness *>> cells;
    std::vector<std::pair<std::string, int>> cell_order;
    for (const SubjectFairness & s : report.subjects) {
        auto key = std::make_pair(s.dist.category, static_cast<int>(s.dist.sentiment));
        if (!cells.count(key)) cell_order.push_back(key);
        cells[key].push_back(&s);
    }

    for (const auto & key : cell_order) {
        const auto & members = cells[key];
        SentimentAggregate agg;
        agg.category  = key.first;
        agg.sentiment = static_cast<Sentiment>(key.second);

        std::vector<long long> pooled;
        for (const SubjectFairness * s : members) {
            if (!s->stable && !include_unstable) continue;
            agg.mean_dpd += s->dpd;
            agg.mean_kl += s->kl;
            agg.n_subjects++;
            agg.row_subjects.push_back(s->dist.subject);
            agg.heatmap.push_back(s->dist.probabilities());
            if (pooled.empty()) pooled.assign(s->dist.counts.size(), 0);
            for (size_t i = 0; i < s->dist.counts.size(); i++) {
                pooled[i] += s->dist.counts[i];
            }
        }
        if (agg.n_subjects == 0) {
            report.gaps.push_back(agg.category + "/" + sentiment_name(agg.sentiment));
            continue;
        }
        agg.mean_dpd /= agg.n_subjects;
        agg.mean_kl /= agg.n_subjects;
        agg.chi2_pooled = chi_squared_uniform(pooled);
        report.aggregates.push_back(std::move(agg));
    }
    return report;
}

static json chi2_to_json(const ChiSquaredResult & c) {
    return json{{"statistic", c.statistic},
                {"df", c.df},
                {"p_value", c.p_value},
                {"n", c.n},
                {"low_power", c.low_power}};
}

json fairness_report_to_json(const FairnessReport & report) {
    json subjects = json::array();
    for (const SubjectFairness & s : report.subjects) {
        json deviations = json::object();
        json counts     = json::object();
        for (size_t i = 0; i < s.dist.groups.size(); i++) {
            deviations[s.dist.groups[i]] = s.deviation_pct[i];
            counts[s.dist.groups[i]]     = s.dist.counts[i];
        }
        subjects.push_back({
            {"category", s.dist.category},
            {"subject", s.dist.subject},
            {"sentiment", sentiment_name(s.dist.sentiment)},
            {"n_valid", s.dist.n_valid},
            {"counts", counts},
            {"dpd", s.dpd},
            {"kl_uniform", s.kl},
            {"deviation_pct", deviations},
            {"chi_squared", chi2_to_json(s.chi2)},
            {"stable", s.stable},
        });
    }
    json aggregates = json::array();
    for (const SentimentAggregate & a : report.aggregates) {
        aggregates.push_back({
            {"category", a.category},
            {"sentiment", sentiment_name(a.sentiment)},
            {"mean_dpd", a.mean_dpd},
            {"mean_kl", a.mean_kl},
            {"n_subjects", a.n_subjects},
            {"chi_squared_pooled", chi2_to_json(a.chi2_pooled)},
            {"heatmap_subjects", a.row_subjects},
            {"heatmap_probabilities", a.heatmap},
        });
    }
    return json{
        {"metadata",
         {{"kl_log_base", report.kl_log_base},
          {"stability_threshold", report.stability_threshold},
          {"include_unstable", report.include_unstable}}},
        {"per_subject", subjects},
        {"per_sentiment", aggregates},
        {"gaps", report.gaps},
    };
}

}  // namespace sbb
