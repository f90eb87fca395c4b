#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wy/data_matrix.hpp"
#include "wy/lattice.hpp"
#include "wy/marginal_tests.hpp"
#include "wy/permutation_plan.hpp"

namespace wy {

// Supplier of per-hypothesis p-values across the whole permutation
// reference set. Implementations are pure functions of their construction
// state: `permuted_pvalues` may be called for any hypothesis, in any order,
// from any thread, and must always produce the same values.
class PValueSource {
public:
    virtual ~PValueSource() = default;
    virtual std::size_t num_hypotheses() const = 0;
    virtual std::size_t num_permutations() const = 0;
    virtual std::size_t identity_index() const = 0;
    // Fills out[g] with the hypothesis' p-value under permutation g.
    virtual void permuted_pvalues(std::size_t hypothesis, std::span<double> out) const = 0;
    // Attainable marginal p-values, when the test exposes them in closed form.
    virtual std::optional<PValueLattice> marginal_lattice() const { return std::nullopt; }
};

std::unique_ptr<PValueSource> make_sweep_source(const DataMatrix& w,
                                                const MarginalTest& test,
                                                const PermutationPlan& plan);

// Arrangement-level statistic for the generic sweep: larger means more
// extreme. `perm` maps output position i to source column perm[i].
using StatisticFn = std::function<double(std::size_t hypothesis, std::span<const std::uint32_t> perm)>;

std::unique_ptr<PValueSource> make_statistic_source(const DataMatrix& w,
                                                    StatisticFn statistic,
                                                    const PermutationPlan& plan);

// Empirical distribution of min-over-hypotheses p-values, one sample per
// permutation in the plan.
struct MinPDistribution {
    std::vector<double> samples;          // indexed by permutation
    std::vector<double> sorted_samples;   // ascending copy
    std::size_t identity_index = 0;
    // Hypotheses the minimum ranges over; empty means all of them.
    std::vector<std::uint32_t> hypothesis_scope;

    std::size_t size() const { return samples.size(); }
    std::size_t count_at_most(double x) const;
    double cdf(double x) const {
        return static_cast<double>(count_at_most(x)) / static_cast<double>(samples.size());
    }
};

enum class AdjustmentMethod {
    wy_single_step,
    wy_step_down,
    bonferroni,
    holm,
    oracle_single_step,
    oracle_step_down
};

const char* method_name(AdjustmentMethod method);

struct AdjustmentResult {
    AdjustmentMethod method = AdjustmentMethod::wy_single_step;
    double alpha = 0.05;
    double threshold = 0.0;                    // common rejection threshold, 0 if none
    std::vector<double> raw_pvalues;
    std::vector<double> adjusted_pvalues;
    std::vector<std::uint32_t> rejections;     // ascending hypothesis indices
};

struct SweepResult {
    std::vector<double> raw_pvalues;   // identity-arrangement marginals
    MinPDistribution minp;
};

// One pass over all hypotheses: raw marginals plus the min-p distribution.
SweepResult sweep_minp(const PValueSource& source, unsigned threads = 1);

MinPDistribution minp_distribution(const PValueSource& source, unsigned threads = 1);

// Largest candidate value s with empirical fraction(min-p <= s) <= alpha;
// 0 when no candidate qualifies.
double wy_threshold(const MinPDistribution& dist, const PValueLattice& candidates, double alpha);

// Candidate thresholds: the marginal lattice when the source provides one,
// otherwise the distinct observed min-p samples and raw p-values.
PValueLattice threshold_candidates(const PValueSource& source, const SweepResult& sweep);

// Single-step adjustment: adjusted_j = fraction of permutations whose min-p
// is <= raw_j. Rejects adjusted <= alpha.
AdjustmentResult wy_adjusted_pvalues(const PValueSource& source, double alpha,
                                     unsigned threads = 1);
AdjustmentResult wy_adjusted_from_sweep(const PValueSource& source, const SweepResult& sweep,
                                        double alpha);

// Free step-down (minP): hypotheses ordered by raw p-value; the reference
// distribution at step k is the min over hypotheses ranked >= k; adjusted
// values made monotone nondecreasing; rejection stops at the first failure.
AdjustmentResult wy_stepdown(const PValueSource& source, double alpha,
                             unsigned threads = 1);
AdjustmentResult wy_stepdown_from_sweep(const PValueSource& source, const SweepResult& sweep,
                                        double alpha);

// Marginal permutation p-values and the min-p distribution from one shared
// round of permutations.
SweepResult shared_sweep(const PValueSource& source, unsigned threads = 1);

} // namespace wy
