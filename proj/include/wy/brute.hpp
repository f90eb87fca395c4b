#pragma once

#include <cstddef>
#include <vector>

#include "wy/engine.hpp"
#include "wy/fraction.hpp"
#include "wy/lattice.hpp"

namespace wy::brute {

// Reference implementations by direct enumeration. Deliberately simple and
// single-threaded; never used on production paths.

struct EnumeratedRankSum {
    std::size_t min_sum = 0;
    std::size_t max_sum = 0;
    std::vector<BigInt> counts;   // indexed by sum - min_sum
    BigInt total = 0;
};

// Exact rank-sum null distribution by walking every C(n1+n2, n1) assignment.
EnumeratedRankSum wilcoxon_null_by_enumeration(std::size_t n1, std::size_t n2,
                                               std::size_t budget = 1'000'000);

// Distinct two-sided p-values derived from the enumerated distribution.
ExactLattice lattice_by_enumeration(std::size_t n1, std::size_t n2);

// Two-sided p-value of an observed group-1 rank sum under the enumerated
// distribution.
Fraction pvalue_by_enumeration(const EnumeratedRankSum& dist, std::size_t rank_sum);

// Bounded partitions of j (parts <= n, count <= n) by explicit recursion.
BigInt partition_count_by_enumeration(std::size_t n, std::size_t j);

// The rejected nested-loop algorithm, kept as an oracle: for each outer
// permutation, the marginal p-value is recomputed from scratch with its own
// inner round over the same plan. Must match the shared sweep exactly on
// exhaustive plans.
SweepResult naive_two_round(const DataMatrix& w, const StatisticFn& statistic,
                            const PermutationPlan& plan, std::size_t budget = 200'000'000);

} // namespace wy::brute
