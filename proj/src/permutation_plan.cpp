#include "wy/permutation_plan.hpp"

#include <algorithm>
#include <numeric>

#include "wy/errors.hpp"
#include "wy/rng.hpp"

namespace wy {

void PermutationPlan::validate() const {
    // count == 0 is allowed only for identity-only plans.
    if (mode == PermutationMode::sampled && count < 1 && !include_identity) {
        throw input_error("sampled permutation plan requires count >= 1");
    }
}

std::size_t binomial_coefficient(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        // n-k+i <= n <= 64 in enumeration contexts; overflow guarded by budgets upstream.
        result = result * (n - k + i) / i;
    }
    return result;
}

AssignmentSet enumerate_assignments(std::size_t n, std::size_t n1, std::size_t budget) {
    if (n1 == 0 || n1 >= n) {
        throw precondition_error("group-1 size must satisfy 0 < n1 < n, got n1=" +
                                 std::to_string(n1) + ", n=" + std::to_string(n));
    }
    const std::size_t total = binomial_coefficient(n, n1);
    if (total > budget) {
        throw precondition_error("exhaustive enumeration of C(" + std::to_string(n) + "," +
                                 std::to_string(n1) + ")=" + std::to_string(total) +
                                 " assignments exceeds budget " + std::to_string(budget));
    }
    AssignmentSet set;
    set.n = n;
    set.n1 = n1;
    set.exhaustive = true;
    set.flat.reserve(total * n1);

    std::vector<std::uint32_t> combo(n1);
    std::iota(combo.begin(), combo.end(), 0);
    for (;;) {
        set.flat.insert(set.flat.end(), combo.begin(), combo.end());
        // next lexicographic combination
        std::size_t i = n1;
        while (i > 0 && combo[i - 1] == n - n1 + i - 1) --i;
        if (i == 0) break;
        ++combo[i - 1];
        for (std::size_t j = i; j < n1; ++j) combo[j] = combo[j - 1] + 1;
    }
    return set;
}

PermutationSet enumerate_permutations(std::size_t n, std::size_t budget) {
    std::size_t total = 1;
    for (std::size_t i = 2; i <= n; ++i) {
        total *= i;
        if (total > budget) {
            throw precondition_error("exhaustive enumeration of " + std::to_string(n) +
                                     "! permutations exceeds budget " + std::to_string(budget));
        }
    }
    PermutationSet set;
    set.n = n;
    set.exhaustive = true;
    set.identity_index = 0;
    set.flat.reserve(total * n);
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        set.flat.insert(set.flat.end(), perm.begin(), perm.end());
    } while (std::next_permutation(perm.begin(), perm.end()));
    return set;
}

PermutationSet sample_permutations(const PermutationPlan& plan, std::size_t n) {
    plan.validate();
    if (plan.mode == PermutationMode::exhaustive) {
        return enumerate_permutations(n);
    }
    PermutationSet set;
    set.n = n;
    set.exhaustive = false;
    const std::size_t extra = plan.include_identity ? 1 : 0;
    const std::size_t total = plan.count + extra;
    set.flat.resize(total * n);
    set.identity_index = 0;

    std::vector<std::uint32_t> identity(n);
    std::iota(identity.begin(), identity.end(), 0);
    if (plan.include_identity) {
        std::copy(identity.begin(), identity.end(), set.flat.begin());
    }
    for (std::size_t i = extra; i < total; ++i) {
        auto row = std::span<std::uint32_t>(set.flat.data() + i * n, n);
        std::copy(identity.begin(), identity.end(), row.begin());
        Rng rng(plan.seed, i);
        rng.shuffle(row);
    }
    return set;
}

AssignmentSet assignments_for_plan(const PermutationPlan& plan, std::size_t n,
                                   std::span<const std::uint32_t> group1_columns) {
    plan.validate();
    const std::size_t n1 = group1_columns.size();
    if (plan.mode == PermutationMode::exhaustive) {
        AssignmentSet set = enumerate_assignments(n, n1);
        // Locate the observed assignment among the sorted combinations.
        std::vector<std::uint32_t> observed(group1_columns.begin(), group1_columns.end());
        std::sort(observed.begin(), observed.end());
        bool found = false;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto row = set.row(i);
            if (std::equal(row.begin(), row.end(), observed.begin())) {
                set.identity_index = i;
                found = true;
                break;
            }
        }
        if (!found) throw precondition_error("observed assignment not found in enumeration");
        return set;
    }

    // Sampled: permute the response positions and collect where group-1
    // labels land. Columns i with g(i) in the observed group-1 set.
    PermutationSet perms = sample_permutations(plan, n);
    std::vector<char> is_group1(n, 0);
    for (auto c : group1_columns) is_group1[c] = 1;

    AssignmentSet set;
    set.n = n;
    set.n1 = n1;
    set.exhaustive = false;
    set.identity_index = perms.identity_index;
    set.flat.resize(perms.size() * n1);
    for (std::size_t i = 0; i < perms.size(); ++i) {
        const auto g = perms.row(i);
        std::uint32_t* out = set.flat.data() + i * n1;
        std::size_t k = 0;
        for (std::uint32_t col = 0; col < n; ++col) {
            if (is_group1[g[col]]) out[k++] = col;
        }
    }
    return set;
}

} // namespace wy
