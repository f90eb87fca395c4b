#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wy/fraction.hpp"

namespace wy {

// Nonnegative integer contingency counts, row-major.
struct ContingencyTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int64_t> counts;

    std::int64_t& at(std::size_t r, std::size_t c) { return counts[r * cols + c]; }
    std::int64_t at(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }
};

ContingencyTable tabulate(const std::vector<std::int64_t>& x_labels,
                          const std::vector<std::int64_t>& y_labels);

struct FisherOptions {
    std::size_t exact_budget = 1'000'000;   // max conditional tables to enumerate
    std::size_t mc_draws = 100'000;         // fallback sample size
    std::uint64_t mc_seed = 0;
};

struct FisherResult {
    double pvalue = 1.0;
    bool exact = true;            // false when the Monte Carlo fallback ran
    std::size_t tables_visited = 0;
};

// Conditional exact test: sum of probabilities of all tables with the
// observed margins whose probability does not exceed the observed table's.
// 2x2 tables are computed in exact rational arithmetic; larger tables are
// enumerated within the budget, beyond which a seeded conditional Monte
// Carlo estimate is returned and flagged.
FisherResult fisher_exact_pvalue(const ContingencyTable& table, const FisherOptions& options = {});

// Exact rational p-value for a 2x2 table (test oracle and fast path).
Fraction fisher_2x2_exact(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

} // namespace wy
