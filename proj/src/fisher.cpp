#include "wy/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wy/errors.hpp"
#include "wy/rng.hpp"

namespace wy {

ContingencyTable tabulate(const std::vector<std::int64_t>& x_labels,
                          const std::vector<std::int64_t>& y_labels) {
    if (x_labels.size() != y_labels.size()) throw input_error("label vectors differ in length");
    auto levels = [](const std::vector<std::int64_t>& v) {
        std::vector<std::int64_t> out(v);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };
    const auto xl = levels(x_labels);
    const auto yl = levels(y_labels);
    ContingencyTable table;
    table.rows = xl.size();
    table.cols = yl.size();
    table.counts.assign(table.rows * table.cols, 0);
    for (std::size_t i = 0; i < x_labels.size(); ++i) {
        const auto r = std::lower_bound(xl.begin(), xl.end(), x_labels[i]) - xl.begin();
        const auto c = std::lower_bound(yl.begin(), yl.end(), y_labels[i]) - yl.begin();
        ++table.counts[static_cast<std::size_t>(r) * table.cols + static_cast<std::size_t>(c)];
    }
    return table;
}

namespace {

BigInt big_binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt result = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
    }
    return result;
}

struct Margins {
    std::vector<std::int64_t> row;
    std::vector<std::int64_t> col;
    std::int64_t total = 0;
};

// Strip empty rows/columns; empty categories carry no information.
ContingencyTable compacted(const ContingencyTable& table) {
    std::vector<std::size_t> keep_rows, keep_cols;
    for (std::size_t r = 0; r < table.rows; ++r) {
        std::int64_t sum = 0;
        for (std::size_t c = 0; c < table.cols; ++c) sum += table.at(r, c);
        if (sum > 0) keep_rows.push_back(r);
    }
    for (std::size_t c = 0; c < table.cols; ++c) {
        std::int64_t sum = 0;
        for (std::size_t r = 0; r < table.rows; ++r) sum += table.at(r, c);
        if (sum > 0) keep_cols.push_back(c);
    }
    ContingencyTable out;
    out.rows = keep_rows.size();
    out.cols = keep_cols.size();
    out.counts.reserve(out.rows * out.cols);
    for (auto r : keep_rows) {
        for (auto c : keep_cols) out.counts.push_back(table.at(r, c));
    }
    return out;
}

Margins margins_of(const ContingencyTable& table) {
    Margins m;
    m.row.assign(table.rows, 0);
    m.col.assign(table.cols, 0);
    for (std::size_t r = 0; r < table.rows; ++r) {
        for (std::size_t c = 0; c < table.cols; ++c) {
            const auto v = table.at(r, c);
            if (v < 0) throw input_error("negative contingency count");
            m.row[r] += v;
            m.col[c] += v;
            m.total += v;
        }
    }
    return m;
}

// log P(T | margins) up to the constant  sum(log r_i!) + sum(log c_j!) - log n!,
// i.e. -sum(log t_ij!). The constant cancels in comparisons.
double neg_log_cell_factorials(const ContingencyTable& table,
                               const std::vector<double>& log_factorial) {
    double acc = 0.0;
    for (auto v : table.counts) acc -= log_factorial[static_cast<std::size_t>(v)];
    return acc;
}

// Comparisons between table probabilities tolerate lgamma rounding.
constexpr double kLogTieTolerance = 1e-7;

class Enumerator {
public:
    Enumerator(const Margins& margins, const std::vector<double>& log_factorial,
               double log_observed, double log_constant, std::size_t budget)
        : margins_(margins), log_factorial_(log_factorial),
          log_observed_(log_observed), log_constant_(log_constant), budget_(budget) {}

    // Depth-first over all tables with the given margins. Returns false if
    // the budget was exhausted.
    bool run() {
        std::vector<std::int64_t> col_left = margins_.col;
        return fill_row(0, col_left, 0.0);
    }

    double probability_mass() const { return mass_; }
    std::size_t visited() const { return visited_; }

private:
    bool fill_row(std::size_t r, std::vector<std::int64_t>& col_left, double log_p_partial) {
        const std::size_t rows = margins_.row.size();
        const std::size_t cols = margins_.col.size();
        if (r == rows) {
            ++visited_;
            if (visited_ > budget_) return false;
            if (log_p_partial <= log_observed_ + kLogTieTolerance) {
                mass_ += std::exp(log_p_partial + log_constant_);
            }
            return true;
        }
        // Enumerate row r cell by cell with a nested recursion over columns.
        std::vector<std::int64_t> cells(cols, 0);
        return fill_cell(r, 0, margins_.row[r], cells, col_left, log_p_partial);
    }

    bool fill_cell(std::size_t r, std::size_t c, std::int64_t row_left,
                   std::vector<std::int64_t>& cells,
                   std::vector<std::int64_t>& col_left, double log_p_partial) {
        const std::size_t cols = margins_.col.size();
        if (c == cols - 1) {
            // Last cell in the row is forced.
            if (row_left > col_left[c]) return true;   // infeasible branch
            cells[c] = row_left;
            col_left[c] -= row_left;
            const double contribution =
                log_p_partial - log_factorial_[static_cast<std::size_t>(row_left)];
            const bool ok = fill_row(r + 1, col_left, contribution);
            col_left[c] += row_left;
            return ok;
        }
        const std::int64_t upper = std::min(row_left, col_left[c]);
        for (std::int64_t v = 0; v <= upper; ++v) {
            cells[c] = v;
            col_left[c] -= v;
            const double contribution = log_p_partial - log_factorial_[static_cast<std::size_t>(v)];
            const bool ok = fill_cell(r, c + 1, row_left - v, cells, col_left, contribution);
            col_left[c] += v;
            if (!ok) return false;
        }
        return true;
    }

    const Margins& margins_;
    const std::vector<double>& log_factorial_;
    double log_observed_;
    double log_constant_;
    std::size_t budget_;
    double mass_ = 0.0;
    std::size_t visited_ = 0;
};

FisherResult fisher_mc(const Margins& margins,
                       const std::vector<double>& log_factorial, double log_observed,
                       const FisherOptions& options) {
    // Conditional draws: fix x labels, shuffle y labels, tabulate. This
    // samples tables from the multivariate hypergeometric given margins.
    std::vector<std::int64_t> xs, ys;
    xs.reserve(static_cast<std::size_t>(margins.total));
    ys.reserve(static_cast<std::size_t>(margins.total));
    for (std::size_t r = 0; r < margins.row.size(); ++r) {
        for (std::int64_t i = 0; i < margins.row[r]; ++i) xs.push_back(static_cast<std::int64_t>(r));
    }
    for (std::size_t c = 0; c < margins.col.size(); ++c) {
        for (std::int64_t i = 0; i < margins.col[c]; ++i) ys.push_back(static_cast<std::int64_t>(c));
    }

    const std::size_t rows = margins.row.size();
    const std::size_t cols = margins.col.size();
    std::vector<std::int64_t> cells(rows * cols, 0);
    Rng rng(options.mc_seed, 0x46495348ULL);

    std::size_t at_most = 0;
    for (std::size_t draw = 0; draw < options.mc_draws; ++draw) {
        rng.shuffle(std::span<std::int64_t>(ys));
        std::fill(cells.begin(), cells.end(), 0);
        for (std::size_t i = 0; i < ys.size(); ++i) {
            ++cells[static_cast<std::size_t>(xs[i]) * cols + static_cast<std::size_t>(ys[i])];
        }
        double log_p = 0.0;
        for (auto v : cells) log_p -= log_factorial[static_cast<std::size_t>(v)];
        if (log_p <= log_observed + kLogTieTolerance) ++at_most;
    }
    FisherResult result;
    // Add-one estimate keeps the p-value valid and strictly positive.
    result.pvalue = static_cast<double>(at_most + 1) / static_cast<double>(options.mc_draws + 1);
    result.exact = false;
    result.tables_visited = options.mc_draws;
    return result;
}

} // namespace

Fraction fisher_2x2_exact(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) throw input_error("negative contingency count");
    const std::int64_t r1 = a + b, r2 = c + d, c1 = a + c;
    const std::int64_t n = r1 + r2;
    if (n == 0) throw input_error("empty contingency table");
    if (r1 == 0 || r2 == 0 || c1 == 0 || c1 == n) {
        return {1, 1};   // degenerate margin: single attainable table
    }
    const BigInt observed_weight = big_binomial(r1, a) * big_binomial(r2, c);
    BigInt mass = 0;
    const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
    const std::int64_t hi = std::min(r1, c1);
    for (std::int64_t k = lo; k <= hi; ++k) {
        const BigInt weight = big_binomial(r1, k) * big_binomial(r2, c1 - k);
        if (weight <= observed_weight) mass += weight;
    }
    return Fraction{mass, big_binomial(n, c1)}.normalized();
}

FisherResult fisher_exact_pvalue(const ContingencyTable& raw, const FisherOptions& options) {
    if (raw.rows == 0 || raw.cols == 0 || raw.counts.empty()) {
        throw input_error("empty contingency table");
    }
    for (auto v : raw.counts) {
        if (v < 0) throw input_error("negative contingency count");
    }
    const ContingencyTable table = compacted(raw);
    if (table.rows == 0 || table.cols == 0) throw input_error("contingency table has no observations");
    if (table.rows == 1 || table.cols == 1) {
        return {1.0, true, 1};   // no free cells given the margins
    }

    if (table.rows == 2 && table.cols == 2) {
        FisherResult result;
        result.pvalue = fisher_2x2_exact(table.at(0, 0), table.at(0, 1),
                                         table.at(1, 0), table.at(1, 1)).value();
        result.exact = true;
        result.tables_visited = static_cast<std::size_t>(
            std::min(table.at(0, 0) + table.at(1, 0), table.at(0, 0) + table.at(0, 1)) + 1);
        return result;
    }

    const Margins margins = margins_of(table);
    std::vector<double> log_factorial(static_cast<std::size_t>(margins.total) + 1, 0.0);
    for (std::size_t i = 2; i < log_factorial.size(); ++i) {
        log_factorial[i] = log_factorial[i - 1] + std::log(static_cast<double>(i));
    }
    const double log_observed = neg_log_cell_factorials(table, log_factorial);

    double log_constant = -log_factorial[static_cast<std::size_t>(margins.total)];
    for (auto r : margins.row) log_constant += log_factorial[static_cast<std::size_t>(r)];
    for (auto c : margins.col) log_constant += log_factorial[static_cast<std::size_t>(c)];
    Enumerator enumerator(margins, log_factorial, log_observed, log_constant,
                          options.exact_budget);

    if (enumerator.run()) {
        FisherResult result;
        result.pvalue = std::min(1.0, enumerator.probability_mass());
        result.exact = true;
        result.tables_visited = enumerator.visited();
        return result;
    }
    return fisher_mc(margins, log_factorial, log_observed, options);
}

} // namespace wy
