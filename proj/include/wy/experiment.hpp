#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wy/engine.hpp"
#include "wy/marginal_tests.hpp"
#include "wy/sim_models.hpp"

namespace wy {

struct ExperimentConfig {
    SimulationScenario scenario;
    MarginalTest test;
    double alpha = 0.05;
    std::size_t n_runs = 250;
    std::size_t permutations = 1000;
    std::size_t oracle_sims = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<AdjustmentMethod> methods = {
        AdjustmentMethod::bonferroni,       AdjustmentMethod::holm,
        AdjustmentMethod::oracle_single_step, AdjustmentMethod::oracle_step_down,
        AdjustmentMethod::wy_single_step,   AdjustmentMethod::wy_step_down,
    };
};

struct MethodSummary {
    AdjustmentMethod method = AdjustmentMethod::bonferroni;
    double mean_true_positives = 0.0;
    double se_true_positives = 0.0;
    double fwer = 0.0;
    double se_fwer = 0.0;
    // Per-run tallies, in run order (kept for relational checks downstream).
    std::vector<double> true_positives_by_run;
    std::vector<char> false_rejection_by_run;
};

struct PhaseTimings {
    double generate_seconds = 0.0;
    double marginals_seconds = 0.0;
    double wy_seconds = 0.0;
    double oracle_seconds = 0.0;
    double total_seconds = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<MethodSummary> methods;
    PhaseTimings timings;

    const MethodSummary* find(AdjustmentMethod method) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

// Multi-cell sweep over (m, rho) grids, one report per cell.
struct GridReport {
    std::vector<ExperimentReport> cells;
};

// CSV table (one row per cell x method), JSON echo, and a grouped-bar SVG
// of mean true positives, one bar group per cell.
void emit_csv(const GridReport& grid, const std::string& path);
void emit_json(const GridReport& grid, const std::string& path);
void emit_svg(const GridReport& grid, const std::string& path);
std::string report_json(const GridReport& grid);

struct BenchmarkReport {
    std::size_t m = 0;
    std::size_t half_m = 0;
    std::size_t n = 0;
    std::size_t permutations = 0;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double generate_seconds = 0.0;
    double prepare_seconds = 0.0;     // ranking + null-table construction
    double sweep_seconds = 0.0;       // min-p sweep + threshold
    double total_seconds = 0.0;
    double per_hypothesis_ms = 0.0;
    double half_m_total_seconds = 0.0;
    double scaling_ratio = 0.0;       // total(m) / total(m/2)
    std::string cpu;
    double threshold = 0.0;
};

BenchmarkReport run_benchmark(std::size_t m, std::size_t permutations, std::uint64_t seed,
                              unsigned threads = 1, std::size_t n = 100);

std::string benchmark_json(const BenchmarkReport& report);

} // namespace wy
