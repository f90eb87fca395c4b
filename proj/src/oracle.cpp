#include "wy/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wy/errors.hpp"
#include "wy/fisher.hpp"
#include "wy/ranks.hpp"
#include "wy/threading.hpp"
#include "wy/wilcoxon.hpp"

namespace wy {

namespace {

constexpr std::uint64_t kOracleSimTag = 0x4f524143ULL;

std::vector<double> wilcoxon_row_pvalues(const DataMatrix& data) {
    const auto levels = data.response_levels();
    if (levels.size() != 2) throw precondition_error("wilcoxon requires a two-label response");
    const auto group1 = data.columns_with_response(levels[0]);
    const auto null = rank_sum_null(group1.size(), data.n - group1.size());
    const auto table = null->pvalue_table();

    std::vector<double> out(data.m);
    for (std::size_t j = 0; j < data.m; ++j) {
        const auto ranks = strict_ranks(data.feature_row(j));
        std::size_t sum = 0;
        for (auto c : group1) sum += ranks[c];
        out[j] = table[sum - null->min_sum()];
    }
    return out;
}

} // namespace

std::vector<double> marginal_pvalues(const DataMatrix& data, const MarginalTest& test) {
    data.validate();
    switch (test.kind) {
        case TestKind::wilcoxon:
            return wilcoxon_row_pvalues(data);
        case TestKind::permutation_t: {
            std::vector<double> out(data.m);
            for (std::size_t j = 0; j < data.m; ++j) {
                out[j] = permutation_t_pvalue(data.feature_row(j), data.response, test.inner_plan);
            }
            return out;
        }
        case TestKind::spearman: {
            std::vector<double> out(data.m);
            for (std::size_t j = 0; j < data.m; ++j) {
                out[j] = spearman_pvalue(data.feature_row(j), data.response, test.inner_plan);
            }
            return out;
        }
        case TestKind::fisher_exact: {
            FisherOptions options;
            options.exact_budget = test.fisher_exact_budget;
            options.mc_draws = test.fisher_mc_draws;
            options.mc_seed = derive_seed(test.inner_plan.seed, 0x46495348ULL);
            std::vector<std::int64_t> y(data.n);
            for (std::size_t i = 0; i < data.n; ++i) y[i] = static_cast<std::int64_t>(data.response[i]);
            std::vector<double> out(data.m);
            for (std::size_t j = 0; j < data.m; ++j) {
                const auto row = data.feature_row(j);
                std::vector<std::int64_t> x(data.n);
                for (std::size_t i = 0; i < data.n; ++i) x[i] = static_cast<std::int64_t>(row[i]);
                out[j] = fisher_exact_pvalue(tabulate(x, y), options).pvalue;
            }
            return out;
        }
    }
    throw input_error("unhandled test kind");
}

namespace {

// Null p-values for one simulated draw of the scenario. Shifts only touch
// alternative rows, so complete-null draws carry the null rows verbatim.
std::vector<double> simulated_null_pvalues(const SimulationScenario& scenario,
                                           const MarginalTest& test, std::uint64_t seed,
                                           std::uint64_t sim_index) {
    SimulationScenario null_scenario = scenario;
    null_scenario.seed = seed;
    null_scenario.fixed_alternatives.clear();
    null_scenario.num_alternatives = 0;
    null_scenario.shift = 0.0;
    const auto dataset = generate_dataset(null_scenario, sim_index);
    return marginal_pvalues(dataset.data, test);
}

struct MinPSamples {
    std::vector<double> minima;      // per simulation, min over that run's true nulls
    PValueLattice candidates;
};

MinPSamples collect_minp_samples(const SimulationScenario& scenario, const MarginalTest& test,
                                 std::size_t n_sims, std::uint64_t seed, unsigned threads) {
    if (n_sims == 0) throw precondition_error("oracle estimation needs n_sims >= 1");
    MinPSamples out;
    out.minima.assign(n_sims, 1.0);
    parallel_for(n_sims, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto pvalues = simulated_null_pvalues(scenario, test, seed, r);
            const auto alternatives = alternatives_for_run(scenario, r);
            std::vector<char> is_alt(scenario.m, 0);
            for (auto j : alternatives) is_alt[j] = 1;
            double best = 1.0;
            for (std::size_t j = 0; j < scenario.m; ++j) {
                if (!is_alt[j]) best = std::min(best, pvalues[j]);
            }
            out.minima[r] = best;
        }
    });

    if (test.kind == TestKind::wilcoxon && scenario.n() % 2 == 0 && scenario.n1 == scenario.n2) {
        out.candidates = wilcoxon_lattice(scenario.n()).to_doubles();
    } else if (test.kind == TestKind::wilcoxon) {
        out.candidates = rank_sum_null(scenario.n1, scenario.n2)->attainable_pvalues().to_doubles();
    } else {
        std::vector<double> values(out.minima);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        out.candidates.values = std::move(values);
    }
    return out;
}

OracleEstimate estimate_from_samples(std::vector<double> minima, const PValueLattice& candidates,
                                     double alpha) {
    std::sort(minima.begin(), minima.end());
    const double total = static_cast<double>(minima.size());
    double threshold = 0.0;
    for (double s : candidates.values) {
        const auto count = std::upper_bound(minima.begin(), minima.end(), s) - minima.begin();
        if (static_cast<double>(count) / total <= alpha) threshold = s;
        else break;
    }
    OracleEstimate estimate;
    estimate.threshold = threshold;
    const auto at_threshold = std::upper_bound(minima.begin(), minima.end(), threshold) - minima.begin();
    estimate.effective_level = static_cast<double>(at_threshold) / total;
    estimate.n_sims = minima.size();
    estimate.mc_stderr =
        std::sqrt(estimate.effective_level * (1.0 - estimate.effective_level) / total);
    return estimate;
}

} // namespace

OracleEstimate oracle_threshold_mc(const SimulationScenario& scenario, const MarginalTest& test,
                                   double alpha, std::size_t n_sims, std::uint64_t seed,
                                   unsigned threads) {
    if (alpha <= 0.0 || alpha >= 1.0) throw input_error("alpha must lie in (0, 1)");
    auto samples = collect_minp_samples(scenario, test, n_sims,
                                        derive_seed(seed, kOracleSimTag), threads);
    return estimate_from_samples(std::move(samples.minima), samples.candidates, alpha);
}

OracleEstimate effective_level(const SimulationScenario& scenario, const MarginalTest& test,
                               double threshold, std::size_t n_sims, std::uint64_t seed,
                               unsigned threads) {
    if (threshold < 0.0) throw input_error("threshold must be nonnegative");
    auto samples = collect_minp_samples(scenario, test, n_sims,
                                        derive_seed(seed, kOracleSimTag, 0x45564cULL), threads);
    std::sort(samples.minima.begin(), samples.minima.end());
    const double total = static_cast<double>(samples.minima.size());
    const auto count =
        std::upper_bound(samples.minima.begin(), samples.minima.end(), threshold) -
        samples.minima.begin();
    OracleEstimate estimate;
    estimate.threshold = threshold;
    estimate.effective_level = static_cast<double>(count) / total;
    estimate.n_sims = n_sims;
    estimate.mc_stderr =
        std::sqrt(estimate.effective_level * (1.0 - estimate.effective_level) / total);
    return estimate;
}

std::size_t min_sample_size(std::size_t m, double alpha) {
    if (m < 1 || alpha <= 0.0 || alpha >= 1.0) throw input_error("need m >= 1 and alpha in (0, 1)");
    const double bound = 2.0 * std::log2(static_cast<double>(m) / alpha) + 2.0;
    auto n = static_cast<std::size_t>(std::ceil(bound));
    if (n % 2 != 0) ++n;
    return std::max<std::size_t>(n, 2);
}

double perfect_block_threshold(std::size_t blocks, double alpha) {
    if (blocks < 1) throw input_error("need at least one block");
    if (alpha <= 0.0 || alpha >= 1.0) throw input_error("alpha must lie in (0, 1)");
    return -std::expm1(std::log1p(-alpha) / static_cast<double>(blocks));
}

double bonferroni_threshold(std::size_t m, double alpha) {
    if (m < 1) throw input_error("need m >= 1");
    return alpha / static_cast<double>(m);
}

std::vector<std::uint32_t> bonferroni_reject(std::span<const double> pvalues, double alpha) {
    const double threshold = bonferroni_threshold(pvalues.size(), alpha);
    std::vector<std::uint32_t> out;
    for (std::size_t j = 0; j < pvalues.size(); ++j) {
        if (pvalues[j] <= threshold) out.push_back(static_cast<std::uint32_t>(j));
    }
    return out;
}

std::vector<std::uint32_t> holm_reject(std::span<const double> pvalues, double alpha) {
    const std::size_t m = pvalues.size();
    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (pvalues[a] != pvalues[b]) return pvalues[a] < pvalues[b];
        return a < b;
    });
    std::vector<std::uint32_t> out;
    for (std::size_t k = 0; k < m; ++k) {
        if (pvalues[order[k]] <= alpha / static_cast<double>(m - k)) {
            out.push_back(order[k]);
        } else {
            break;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

OracleCalibration::OracleCalibration(const SimulationScenario& scenario, const MarginalTest& test,
                                     std::size_t n_sims, std::uint64_t seed, unsigned threads)
    : n_sims_(n_sims), m_(scenario.m) {
    if (n_sims == 0) throw precondition_error("oracle calibration needs n_sims >= 1");
    pvalues_.assign(n_sims_ * m_, 1.0);
    const std::uint64_t sim_seed = derive_seed(seed, kOracleSimTag);
    parallel_for(n_sims_, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto pvalues = simulated_null_pvalues(scenario, test, sim_seed, r);
            std::copy(pvalues.begin(), pvalues.end(), pvalues_.begin() + r * m_);
        }
    });

    if (test.kind == TestKind::wilcoxon && scenario.n() % 2 == 0 && scenario.n1 == scenario.n2) {
        candidates_ = wilcoxon_lattice(scenario.n()).to_doubles();
        lattice_candidates_ = true;
    } else if (test.kind == TestKind::wilcoxon) {
        candidates_ = rank_sum_null(scenario.n1, scenario.n2)->attainable_pvalues().to_doubles();
        lattice_candidates_ = true;
    }
}

std::vector<double> OracleCalibration::minima_over(std::span<const std::uint32_t> columns,
                                                   std::span<const char> excluded) const {
    std::vector<double> minima(n_sims_, 1.0);
    for (std::size_t r = 0; r < n_sims_; ++r) {
        const double* row = pvalues_.data() + r * m_;
        double best = 1.0;
        for (auto j : columns) {
            if (!excluded.empty() && excluded[j]) continue;
            best = std::min(best, row[j]);
        }
        minima[r] = best;
    }
    return minima;
}

double OracleCalibration::threshold_from_sorted(std::vector<double> minima, double alpha) const {
    std::sort(minima.begin(), minima.end());
    const double total = static_cast<double>(minima.size());
    const PValueLattice* candidates = &candidates_;
    PValueLattice fallback;
    if (!lattice_candidates_) {
        fallback.values = minima;
        fallback.values.erase(std::unique(fallback.values.begin(), fallback.values.end()),
                              fallback.values.end());
        candidates = &fallback;
    }
    double threshold = 0.0;
    for (double s : candidates->values) {
        const auto count = std::upper_bound(minima.begin(), minima.end(), s) - minima.begin();
        if (static_cast<double>(count) / total <= alpha) threshold = s;
        else break;
    }
    return threshold;
}

double OracleCalibration::single_step_threshold(std::span<const std::uint32_t> true_nulls,
                                                double alpha) const {
    return threshold_from_sorted(minima_over(true_nulls, {}), alpha);
}

std::vector<std::uint32_t> OracleCalibration::step_down_reject(
    std::span<const double> raw_pvalues, std::span<const std::uint32_t> true_nulls,
    double alpha) const {
    const std::size_t m = raw_pvalues.size();
    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (raw_pvalues[a] != raw_pvalues[b]) return raw_pvalues[a] < raw_pvalues[b];
        return a < b;
    });

    std::vector<char> is_null(m, 0);
    for (auto j : true_nulls) is_null[j] = 1;

    std::vector<char> excluded(m, 0);
    double threshold = threshold_from_sorted(minima_over(true_nulls, excluded), alpha);
    std::vector<std::uint32_t> rejections;
    for (std::size_t k = 0; k < m; ++k) {
        const auto j = order[k];
        if (raw_pvalues[j] > threshold) break;
        rejections.push_back(j);
        if (is_null[j]) {
            // A null left the active set; recalibrate over the remainder.
            excluded[j] = 1;
            threshold = threshold_from_sorted(minima_over(true_nulls, excluded), alpha);
        }
    }
    std::sort(rejections.begin(), rejections.end());
    return rejections;
}

} // namespace wy
