#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wy/data_matrix.hpp"
#include "wy/partition.hpp"
#include "wy/rng.hpp"

namespace wy {

enum class CovarianceStructure { independent, toeplitz, block };

// Two-sample Gaussian location-shift generator with known ground truth.
// Group sizes n1/n2, unit-variance noise with either AR(1) (Toeplitz)
// correlation rho^|i-j| across features or equicorrelated blocks.
struct SimulationScenario {
    std::size_t m = 100;
    std::size_t n1 = 50;
    std::size_t n2 = 50;
    CovarianceStructure structure = CovarianceStructure::independent;
    double rho = 0.0;
    std::size_t block_size = 50;

    // Alternatives: either pinned indices, or `num_alternatives` drawn
    // without replacement from the first `alternative_pool` features.
    std::vector<std::uint32_t> fixed_alternatives;
    std::size_t num_alternatives = 0;
    std::size_t alternative_pool = 100;
    bool redraw_alternatives_per_run = true;
    double shift = 0.75;

    std::uint64_t seed = 0;

    std::size_t n() const { return n1 + n2; }
    void validate() const;
};

SimulationScenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const SimulationScenario& scenario);
SimulationScenario load_scenario(const std::string& path);

// Row-major m x n complete-null draws. AR(1) down the feature index gives
// corr(row i, row k) = rho^|i-k| with unit variances in O(m*n); the
// one-factor block construction gives within-block correlation exactly rho.
std::vector<double> sample_toeplitz(std::size_t m, std::size_t n, double rho, Rng& rng);
std::vector<double> sample_block(std::size_t m, std::size_t n, double rho,
                                 std::size_t block_size, Rng& rng);
std::vector<double> sample_independent(std::size_t m, std::size_t n, Rng& rng);

// Adds `delta` to the listed feature rows in group-2 columns only.
void apply_shift(std::vector<double>& features, std::size_t n,
                 std::span<const double> response, double group2_label,
                 std::span<const std::uint32_t> alternatives, double delta);

struct GeneratedDataset {
    DataMatrix data;
    HypothesisPartition partition;
};

// Alternative indices for a given run (fixed, or drawn per the redraw policy).
std::vector<std::uint32_t> alternatives_for_run(const SimulationScenario& scenario,
                                                std::uint64_t run_index);

// Complete-null feature matrix for a given run, before any shift.
std::vector<double> null_features_for_run(const SimulationScenario& scenario,
                                          std::uint64_t run_index);

GeneratedDataset generate_dataset(const SimulationScenario& scenario, std::uint64_t run_index);

std::vector<std::vector<std::uint32_t>> scenario_blocks(const SimulationScenario& scenario);

} // namespace wy
