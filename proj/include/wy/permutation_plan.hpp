#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wy/data_matrix.hpp"

namespace wy {

enum class PermutationMode { exhaustive, sampled };

// How the permutation group is traversed. Sampled mode draws each
// permutation from its own substream keyed by (seed, index), so the sequence
// does not depend on evaluation order or worker count.
struct PermutationPlan {
    PermutationMode mode = PermutationMode::sampled;
    std::size_t count = 1000;        // sampled mode only
    std::uint64_t seed = 0;
    bool include_identity = true;    // sampled mode: identity occupies slot 0

    void validate() const;
};

// Materialized set of full permutations of {0,...,n-1}, one row per
// permutation. `identity_index` locates the un-permuted arrangement, which
// carries the observed statistic.
struct PermutationSet {
    std::size_t n = 0;
    std::vector<std::uint32_t> flat;   // size() * n entries
    std::size_t identity_index = 0;
    bool exhaustive = false;

    std::size_t size() const { return n == 0 ? 0 : flat.size() / n; }
    std::span<const std::uint32_t> row(std::size_t i) const { return {flat.data() + i * n, n}; }
};

// Two-group reduction of a permutation set: per permutation, the column
// indices landing in group 1. All permutations inducing the same label
// assignment are interchangeable for two-sample statistics.
struct AssignmentSet {
    std::size_t n = 0;
    std::size_t n1 = 0;
    std::vector<std::uint32_t> flat;   // size() * n1 entries
    std::size_t identity_index = 0;
    bool exhaustive = false;

    std::size_t size() const { return n1 == 0 ? 0 : flat.size() / n1; }
    std::span<const std::uint32_t> row(std::size_t i) const { return {flat.data() + i * n1, n1}; }
};

// All C(n, n1) distinct group-1 index subsets in lexicographic order.
AssignmentSet enumerate_assignments(std::size_t n, std::size_t n1,
                                    std::size_t budget = 2'000'000);

// All n! permutations in lexicographic order (identity first).
PermutationSet enumerate_permutations(std::size_t n, std::size_t budget = 2'000'000);

// Permutations drawn per the plan. Exhaustive mode enumerates; sampled mode
// shuffles via per-index substreams.
PermutationSet sample_permutations(const PermutationPlan& plan, std::size_t n);

// Group-1 assignments induced by the plan for a two-label response.
// `group1_columns` are the observed positions of the group-1 label.
AssignmentSet assignments_for_plan(const PermutationPlan& plan, std::size_t n,
                                   std::span<const std::uint32_t> group1_columns);

std::size_t binomial_coefficient(std::size_t n, std::size_t k);

} // namespace wy
