#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "wy/fraction.hpp"
#include "wy/lattice.hpp"

namespace wy {

// Exact null distribution of the two-sample rank-sum statistic for group
// sizes (n1, n2): the count of n1-subsets of ranks {1..n} attaining each sum.
// Counts are exact integers; doubles appear only in the lookup table.
class RankSumNull {
public:
    RankSumNull(std::size_t n1, std::size_t n2);

    std::size_t n1() const { return n1_; }
    std::size_t n2() const { return n2_; }
    std::size_t min_sum() const { return min_sum_; }
    std::size_t max_sum() const { return max_sum_; }

    const BigInt& total() const { return total_; }
    const BigInt& count(std::size_t sum) const { return counts_[sum - min_sum_]; }

    // Two-sided p-value numerator over denominator total():
    // min(total, 2 * min(P(R <= sum), P(R >= sum)) * total).
    BigInt two_sided_numerator(std::size_t sum) const;
    double two_sided_pvalue(std::size_t sum) const { return pvalue_by_sum_[sum - min_sum_]; }

    // p-value lookup indexed by (sum - min_sum).
    std::span<const double> pvalue_table() const { return pvalue_by_sum_; }

    // Distinct attainable two-sided p-values, ascending, max == 1.
    ExactLattice attainable_pvalues() const;

private:
    std::size_t n1_, n2_;
    std::size_t min_sum_, max_sum_;
    BigInt total_;
    std::vector<BigInt> counts_;
    std::vector<BigInt> lower_cumulative_;   // P(R <= sum) * total
    std::vector<BigInt> upper_cumulative_;   // P(R >= sum) * total
    std::vector<double> pvalue_by_sum_;
};

// Process-wide memoized lookup; safe for concurrent use.
std::shared_ptr<const RankSumNull> rank_sum_null(std::size_t n1, std::size_t n2);

// Exact two-sided Wilcoxon p-value. Pooled sample must be tie-free.
double wilcoxon_pvalue(std::span<const double> group1, std::span<const double> group2);
Fraction wilcoxon_pvalue_exact(std::span<const double> group1, std::span<const double> group2);

// Attainable two-sided p-values for the equal-split test on n samples,
// computed from bounded-partition counts: the i-th raw value is
// 2 * sum_{j<=i} q_{n/2}(j) / C(n, n/2), then values above 1 are capped and
// duplicates merged. Requires even n >= 2.
ExactLattice wilcoxon_lattice(std::size_t n);

} // namespace wy
