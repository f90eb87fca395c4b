#include "wy/brute.hpp"

#include <algorithm>
#include <numeric>

#include "wy/errors.hpp"
#include "wy/permutation_plan.hpp"

namespace wy::brute {

EnumeratedRankSum wilcoxon_null_by_enumeration(std::size_t n1, std::size_t n2,
                                               std::size_t budget) {
    const std::size_t n = n1 + n2;
    EnumeratedRankSum dist;
    dist.min_sum = n1 * (n1 + 1) / 2;
    dist.max_sum = n1 * (2 * n - n1 + 1) / 2;
    dist.counts.assign(dist.max_sum - dist.min_sum + 1, 0);

    const auto assignments = enumerate_assignments(n, n1, budget);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        std::size_t sum = 0;
        for (auto idx : assignments.row(i)) sum += idx + 1;   // ranks are 1-based columns
        ++dist.counts[sum - dist.min_sum];
    }
    dist.total = static_cast<long long>(assignments.size());
    return dist;
}

Fraction pvalue_by_enumeration(const EnumeratedRankSum& dist, std::size_t rank_sum) {
    BigInt lower = 0, upper = 0;
    for (std::size_t s = dist.min_sum; s <= rank_sum; ++s) lower += dist.counts[s - dist.min_sum];
    for (std::size_t s = rank_sum; s <= dist.max_sum; ++s) upper += dist.counts[s - dist.min_sum];
    BigInt num = 2 * std::min(lower, upper);
    if (num > dist.total) num = dist.total;
    return {num, dist.total};
}

ExactLattice lattice_by_enumeration(std::size_t n1, std::size_t n2) {
    const auto dist = wilcoxon_null_by_enumeration(n1, n2);
    std::vector<BigInt> nums;
    for (std::size_t s = dist.min_sum; s <= dist.max_sum; ++s) {
        if (dist.counts[s - dist.min_sum].is_zero()) continue;
        nums.push_back(pvalue_by_enumeration(dist, s).num);
    }
    std::sort(nums.begin(), nums.end());
    nums.erase(std::unique(nums.begin(), nums.end()), nums.end());
    return {std::move(nums), dist.total};
}

namespace {

BigInt count_partitions(std::size_t remaining, std::size_t max_part, std::size_t parts_left) {
    if (remaining == 0) return 1;
    if (max_part == 0 || parts_left == 0) return 0;
    BigInt total = 0;
    for (std::size_t part = std::min(remaining, max_part); part >= 1; --part) {
        total += count_partitions(remaining - part, part, parts_left - 1);
    }
    return total;
}

} // namespace

BigInt partition_count_by_enumeration(std::size_t n, std::size_t j) {
    if (j == 0) return 1;
    return count_partitions(j, n, n);
}

SweepResult naive_two_round(const DataMatrix& w, const StatisticFn& statistic,
                            const PermutationPlan& plan, std::size_t budget) {
    const auto perms = sample_permutations(plan, w.n);
    const std::size_t count = perms.size();
    if (w.m * count * count > budget) {
        throw precondition_error("naive two-round computation exceeds its size budget");
    }

    SweepResult result;
    result.raw_pvalues.assign(w.m, 1.0);
    result.minp.samples.assign(count, 1.0);
    result.minp.identity_index = perms.identity_index;

    std::vector<std::uint32_t> composed(w.n);
    std::vector<double> observed_stats(count);
    for (std::size_t j = 0; j < w.m; ++j) {
        for (std::size_t outer = 0; outer < count; ++outer) {
            observed_stats[outer] = statistic(j, perms.row(outer));
        }
        for (std::size_t outer = 0; outer < count; ++outer) {
            const auto g = perms.row(outer);
            std::size_t at_least = 0;
            for (std::size_t inner = 0; inner < count; ++inner) {
                const auto gp = perms.row(inner);
                for (std::size_t i = 0; i < w.n; ++i) composed[i] = g[gp[i]];
                if (statistic(j, composed) >= observed_stats[outer]) ++at_least;
            }
            const double pvalue = static_cast<double>(at_least) / static_cast<double>(count);
            if (outer == perms.identity_index) result.raw_pvalues[j] = pvalue;
            result.minp.samples[outer] = std::min(result.minp.samples[outer], pvalue);
        }
    }
    result.minp.sorted_samples = result.minp.samples;
    std::sort(result.minp.sorted_samples.begin(), result.minp.sorted_samples.end());
    return result;
}

} // namespace wy::brute
