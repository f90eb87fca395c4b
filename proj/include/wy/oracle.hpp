#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wy/engine.hpp"
#include "wy/lattice.hpp"
#include "wy/marginal_tests.hpp"
#include "wy/sim_models.hpp"

namespace wy {

// Marginal p-values for every feature row of a dataset.
std::vector<double> marginal_pvalues(const DataMatrix& data, const MarginalTest& test);

struct OracleEstimate {
    double threshold = 0.0;         // estimated optimal single-step threshold
    double effective_level = 0.0;   // empirical fraction(min-p <= threshold)
    std::size_t n_sims = 0;
    double mc_stderr = 0.0;         // binomial standard error at the threshold
};

// Monte Carlo estimate of the optimal single-step threshold: simulate
// datasets from the scenario, take the min p-value over that run's true
// nulls, and return the largest candidate whose empirical CDF is <= alpha
// (0 when no candidate qualifies). Candidates come from the exact Wilcoxon
// lattice when available, otherwise from the simulated min-p values.
OracleEstimate oracle_threshold_mc(const SimulationScenario& scenario, const MarginalTest& test,
                                   double alpha, std::size_t n_sims, std::uint64_t seed,
                                   unsigned threads = 1);

// Fresh-simulation estimate of P(min over true nulls <= threshold).
OracleEstimate effective_level(const SimulationScenario& scenario, const MarginalTest& test,
                               double threshold, std::size_t n_sims, std::uint64_t seed,
                               unsigned threads = 1);

// Smallest even n with n >= 2*log2(m/alpha) + 2; at this size the smallest
// attainable equal-split rank-sum p-value is at most alpha/m.
std::size_t min_sample_size(std::size_t m, double alpha);

// Optimal threshold under B perfectly dependent blocks: 1 - (1-alpha)^(1/B).
double perfect_block_threshold(std::size_t blocks, double alpha);

double bonferroni_threshold(std::size_t m, double alpha);
std::vector<std::uint32_t> bonferroni_reject(std::span<const double> pvalues, double alpha);

// Sequentially rejective Bonferroni: reject while p_(k) <= alpha/(m-k+1).
std::vector<std::uint32_t> holm_reject(std::span<const double> pvalues, double alpha);

// Null-calibrated thresholds shared across experiment runs: one batch of
// complete-null simulations, re-aggregated per run for the run's true-null
// set. Valid because each p-value depends only on its own feature row.
class OracleCalibration {
public:
    OracleCalibration(const SimulationScenario& scenario, const MarginalTest& test,
                      std::size_t n_sims, std::uint64_t seed, unsigned threads = 1);

    std::size_t n_sims() const { return n_sims_; }
    std::size_t m() const { return m_; }
    std::span<const double> sim_row(std::size_t sim) const { return {pvalues_.data() + sim * m_, m_}; }

    double single_step_threshold(std::span<const std::uint32_t> true_nulls, double alpha) const;

    // Step-down with known truth: reject in ascending raw order while the
    // run's p-value clears the threshold recalibrated over the not-yet-
    // rejected true nulls.
    std::vector<std::uint32_t> step_down_reject(std::span<const double> raw_pvalues,
                                                std::span<const std::uint32_t> true_nulls,
                                                double alpha) const;

    const PValueLattice& candidates() const { return candidates_; }

private:
    std::vector<double> minima_over(std::span<const std::uint32_t> columns,
                                    std::span<const char> excluded) const;
    double threshold_from_sorted(std::vector<double> minima, double alpha) const;

    std::size_t n_sims_ = 0;
    std::size_t m_ = 0;
    std::vector<double> pvalues_;   // n_sims x m, row-major
    PValueLattice candidates_;
    bool lattice_candidates_ = false;
};

} // namespace wy
