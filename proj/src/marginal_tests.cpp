#include "wy/marginal_tests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wy/errors.hpp"
#include "wy/ranks.hpp"

namespace wy {

MarginalTest MarginalTest::from_name(const std::string& name) {
    MarginalTest test;
    if (name == "wilcoxon") test.kind = TestKind::wilcoxon;
    else if (name == "perm-t") test.kind = TestKind::permutation_t;
    else if (name == "spearman") test.kind = TestKind::spearman;
    else if (name == "fisher") test.kind = TestKind::fisher_exact;
    else throw input_error("unknown test '" + name + "' (expected wilcoxon|perm-t|spearman|fisher)");
    return test;
}

double abs_t_statistic(std::span<const double> group1, std::span<const double> group2) {
    const std::size_t n1 = group1.size(), n2 = group2.size();
    if (n1 < 2 || n2 < 2) throw precondition_error("t statistic requires both groups of size >= 2");
    const double mean1 = std::accumulate(group1.begin(), group1.end(), 0.0) / static_cast<double>(n1);
    const double mean2 = std::accumulate(group2.begin(), group2.end(), 0.0) / static_cast<double>(n2);
    double ss = 0.0;
    for (double v : group1) ss += (v - mean1) * (v - mean1);
    for (double v : group2) ss += (v - mean2) * (v - mean2);
    const double pooled = ss / static_cast<double>(n1 + n2 - 2);
    if (pooled <= 0.0) {
        return mean1 == mean2 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    const double se = std::sqrt(pooled * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
    return std::abs(mean1 - mean2) / se;
}

namespace {

struct TwoGroups {
    std::vector<std::uint32_t> group1;
    std::size_t n = 0;
};

TwoGroups split_by_label(std::span<const double> response) {
    std::vector<double> levels(response.begin(), response.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.size() != 2) {
        throw precondition_error("two-sample test requires exactly two response labels, got " +
                                 std::to_string(levels.size()));
    }
    TwoGroups groups;
    groups.n = response.size();
    for (std::size_t i = 0; i < response.size(); ++i) {
        if (response[i] == levels[0]) groups.group1.push_back(static_cast<std::uint32_t>(i));
    }
    return groups;
}

double abs_t_for_assignment(std::span<const double> feature, std::span<const std::uint32_t> group1,
                            double total_sum, double total_sq) {
    const std::size_t n = feature.size();
    const std::size_t n1 = group1.size(), n2 = n - n1;
    double s1 = 0.0;
    for (auto idx : group1) s1 += feature[idx];
    const double mean1 = s1 / static_cast<double>(n1);
    const double mean2 = (total_sum - s1) / static_cast<double>(n2);
    const double ss = total_sq - static_cast<double>(n1) * mean1 * mean1 -
                      static_cast<double>(n2) * mean2 * mean2;
    const double pooled = ss / static_cast<double>(n - 2);
    if (pooled <= 0.0) {
        return mean1 == mean2 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    const double se = std::sqrt(pooled * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
    return std::abs(mean1 - mean2) / se;
}

} // namespace

double permutation_t_pvalue(std::span<const double> feature,
                            std::span<const double> response,
                            const PermutationPlan& plan) {
    const auto groups = split_by_label(response);
    const std::size_t n1 = groups.group1.size();
    if (n1 < 2 || groups.n - n1 < 2) {
        throw precondition_error("permutation t-test requires both groups of size >= 2");
    }
    const auto assignments = assignments_for_plan(plan, groups.n, groups.group1);

    const double total_sum = std::accumulate(feature.begin(), feature.end(), 0.0);
    double total_sq = 0.0;
    for (double v : feature) total_sq += v * v;

    const double observed =
        abs_t_for_assignment(feature, assignments.row(assignments.identity_index), total_sum, total_sq);
    std::size_t at_least = 0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (abs_t_for_assignment(feature, assignments.row(i), total_sum, total_sq) >= observed) {
            ++at_least;
        }
    }
    return static_cast<double>(at_least) / static_cast<double>(assignments.size());
}

double spearman_rho(std::span<const double> feature_ranks,
                    std::span<const double> response_ranks) {
    const std::size_t n = feature_ranks.size();
    const double mean_f = std::accumulate(feature_ranks.begin(), feature_ranks.end(), 0.0) / n;
    const double mean_r = std::accumulate(response_ranks.begin(), response_ranks.end(), 0.0) / n;
    double cov = 0.0, var_f = 0.0, var_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double df = feature_ranks[i] - mean_f;
        const double dr = response_ranks[i] - mean_r;
        cov += df * dr;
        var_f += df * df;
        var_r += dr * dr;
    }
    if (var_f <= 0.0 || var_r <= 0.0) return 0.0;
    return cov / std::sqrt(var_f * var_r);
}

double spearman_pvalue(std::span<const double> feature,
                       std::span<const double> response,
                       const PermutationPlan& plan) {
    if (feature.size() < 3) throw precondition_error("spearman requires n >= 3");
    const auto fr = mid_ranks(feature);
    const auto rr = mid_ranks(response);
    const auto perms = sample_permutations(plan, feature.size());

    std::vector<double> permuted(rr.size());
    auto rho_for = [&](std::span<const std::uint32_t> g) {
        for (std::size_t i = 0; i < g.size(); ++i) permuted[i] = rr[g[i]];
        return std::abs(spearman_rho(fr, permuted));
    };

    const double observed = rho_for(perms.row(perms.identity_index));
    std::size_t at_least = 0;
    for (std::size_t i = 0; i < perms.size(); ++i) {
        if (rho_for(perms.row(i)) >= observed) ++at_least;
    }
    return static_cast<double>(at_least) / static_cast<double>(perms.size());
}

} // namespace wy
