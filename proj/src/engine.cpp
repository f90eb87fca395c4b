#include "wy/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "wy/errors.hpp"
#include "wy/fisher.hpp"
#include "wy/ranks.hpp"
#include "wy/rng.hpp"
#include "wy/threading.hpp"
#include "wy/wilcoxon.hpp"

namespace wy {

namespace {

// Within-sample calibration: p[g] = #{g' : stat[g'] >= stat[g]} / P.
void stats_to_pvalues(std::span<const double> stats, std::span<double> out) {
    std::vector<double> sorted(stats.begin(), stats.end());
    std::sort(sorted.begin(), sorted.end());
    const double total = static_cast<double>(stats.size());
    for (std::size_t g = 0; g < stats.size(); ++g) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), stats[g]) - sorted.begin();
        out[g] = static_cast<double>(stats.size() - static_cast<std::size_t>(below)) / total;
    }
}

PValueLattice uniform_grid_lattice(std::size_t permutations) {
    PValueLattice lattice;
    lattice.values.reserve(permutations);
    for (std::size_t k = 1; k <= permutations; ++k) {
        lattice.values.push_back(static_cast<double>(k) / static_cast<double>(permutations));
    }
    return lattice;
}

std::vector<std::uint16_t> narrow_indices(const std::vector<std::uint32_t>& wide) {
    std::vector<std::uint16_t> out(wide.size());
    for (std::size_t i = 0; i < wide.size(); ++i) out[i] = static_cast<std::uint16_t>(wide[i]);
    return out;
}

struct TwoLabelSplit {
    std::vector<std::uint32_t> group1_columns;
    std::size_t n = 0;
};

TwoLabelSplit two_label_split(const DataMatrix& w) {
    const auto levels = w.response_levels();
    if (levels.size() != 2) {
        throw precondition_error("two-sample test requires exactly two response labels, got " +
                                 std::to_string(levels.size()));
    }
    TwoLabelSplit split;
    split.n = w.n;
    split.group1_columns = w.columns_with_response(levels[0]);
    if (split.group1_columns.empty() || split.group1_columns.size() == w.n) {
        throw precondition_error("both response groups must be nonempty");
    }
    return split;
}

// Exact Wilcoxon marginals over two-group assignments. Rows with pooled
// ties fall back to a within-sample calibrated rank t-statistic when the
// policy allows it.
class WilcoxonSweepSource final : public PValueSource {
public:
    WilcoxonSweepSource(const DataMatrix& w, const MarginalTest& test, const PermutationPlan& plan) {
        const auto split = two_label_split(w);
        n_ = w.n;
        m_ = w.m;
        n1_ = split.group1_columns.size();
        assignments_ = assignments_for_plan(plan, n_, split.group1_columns);
        assignment_index_ = narrow_indices(assignments_.flat);

        const auto null = rank_sum_null(n1_, n_ - n1_);
        table_ = std::vector<double>(null->pvalue_table().begin(), null->pvalue_table().end());
        min_sum_ = null->min_sum();

        ranks_.assign(m_ * n_, 0);
        tied_rows_.assign(m_, 0);
        for (std::size_t j = 0; j < m_; ++j) {
            const auto row = w.feature_row(j);
            if (has_ties(row)) {
                if (test.tie_policy == TiePolicy::strict) {
                    throw precondition_error("feature " + std::to_string(j + 1) +
                                             " has tied values under the strict tie policy");
                }
                tied_rows_[j] = 1;
                const auto mids = mid_ranks(row);
                tied_features_.emplace(j, std::vector<double>(mids.begin(), mids.end()));
            } else {
                const auto ranks = strict_ranks(row);
                for (std::size_t i = 0; i < n_; ++i) {
                    ranks_[j * n_ + i] = static_cast<std::uint16_t>(ranks[i]);
                }
            }
        }

        if (n_ % 2 == 0 && n1_ == n_ - n1_) {
            lattice_ = wilcoxon_lattice(n_).to_doubles();
        } else {
            lattice_ = null->attainable_pvalues().to_doubles();
        }
        if (!tied_features_.empty()) {
            // Fallback rows live on the permutation grid; merge both lattices.
            const auto grid = uniform_grid_lattice(assignments_.size());
            std::vector<double> merged;
            merged.reserve(lattice_.values.size() + grid.values.size());
            std::merge(lattice_.values.begin(), lattice_.values.end(),
                       grid.values.begin(), grid.values.end(), std::back_inserter(merged));
            merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
            lattice_.values = std::move(merged);
        }
    }

    std::size_t num_hypotheses() const override { return m_; }
    std::size_t num_permutations() const override { return assignments_.size(); }
    std::size_t identity_index() const override { return assignments_.identity_index; }

    void permuted_pvalues(std::size_t j, std::span<double> out) const override {
        if (tied_rows_[j]) {
            tied_row_pvalues(j, out);
            return;
        }
        const std::uint16_t* ranks = ranks_.data() + j * n_;
        const std::uint16_t* idx = assignment_index_.data();
        const std::size_t count = assignments_.size();
        const double* table = table_.data() - min_sum_;
        for (std::size_t g = 0; g < count; ++g) {
            std::uint32_t sum = 0;
            for (std::size_t k = 0; k < n1_; ++k) sum += ranks[idx[k]];
            out[g] = table[sum];
            idx += n1_;
        }
    }

    std::optional<PValueLattice> marginal_lattice() const override { return lattice_; }

private:
    void tied_row_pvalues(std::size_t j, std::span<double> out) const {
        const auto& mids = tied_features_.at(j);
        const std::size_t count = assignments_.size();
        const double total_sum = std::accumulate(mids.begin(), mids.end(), 0.0);
        double total_sq = 0.0;
        for (double v : mids) total_sq += v * v;
        std::vector<double> stats(count);
        const std::size_t n2 = n_ - n1_;
        for (std::size_t g = 0; g < count; ++g) {
            const auto row = assignments_.row(g);
            double s1 = 0.0;
            for (auto c : row) s1 += mids[c];
            const double mean1 = s1 / static_cast<double>(n1_);
            const double mean2 = (total_sum - s1) / static_cast<double>(n2);
            const double ss = total_sq - static_cast<double>(n1_) * mean1 * mean1 -
                              static_cast<double>(n2) * mean2 * mean2;
            const double pooled = ss / static_cast<double>(n_ - 2);
            if (pooled <= 0.0) {
                stats[g] = mean1 == mean2 ? 0.0 : std::numeric_limits<double>::infinity();
            } else {
                stats[g] = std::abs(mean1 - mean2) /
                           std::sqrt(pooled * (1.0 / n1_ + 1.0 / static_cast<double>(n2)));
            }
        }
        stats_to_pvalues(stats, out);
    }

    std::size_t n_ = 0, m_ = 0, n1_ = 0;
    AssignmentSet assignments_;
    std::vector<std::uint16_t> assignment_index_;
    std::vector<std::uint16_t> ranks_;
    std::vector<char> tied_rows_;
    std::map<std::size_t, std::vector<double>> tied_features_;
    std::vector<double> table_;
    std::size_t min_sum_ = 0;
    PValueLattice lattice_;
};

// Permutation t-test marginals calibrated within the shared sweep.
class PermutationTSource final : public PValueSource {
public:
    PermutationTSource(const DataMatrix& w, const PermutationPlan& plan) : data_(w) {
        const auto split = two_label_split(w);
        n1_ = split.group1_columns.size();
        if (n1_ < 2 || w.n - n1_ < 2) {
            throw precondition_error("permutation t-test requires both groups of size >= 2");
        }
        assignments_ = assignments_for_plan(plan, w.n, split.group1_columns);
    }

    std::size_t num_hypotheses() const override { return data_.m; }
    std::size_t num_permutations() const override { return assignments_.size(); }
    std::size_t identity_index() const override { return assignments_.identity_index; }

    void permuted_pvalues(std::size_t j, std::span<double> out) const override {
        const auto feature = data_.feature_row(j);
        const std::size_t n = data_.n, n2 = n - n1_;
        const double total_sum = std::accumulate(feature.begin(), feature.end(), 0.0);
        double total_sq = 0.0;
        for (double v : feature) total_sq += v * v;

        std::vector<double> stats(assignments_.size());
        for (std::size_t g = 0; g < assignments_.size(); ++g) {
            const auto row = assignments_.row(g);
            double s1 = 0.0;
            for (auto c : row) s1 += feature[c];
            const double mean1 = s1 / static_cast<double>(n1_);
            const double mean2 = (total_sum - s1) / static_cast<double>(n2);
            const double ss = total_sq - static_cast<double>(n1_) * mean1 * mean1 -
                              static_cast<double>(n2) * mean2 * mean2;
            const double pooled = ss / static_cast<double>(n - 2);
            if (pooled <= 0.0) {
                stats[g] = mean1 == mean2 ? 0.0 : std::numeric_limits<double>::infinity();
            } else {
                stats[g] = std::abs(mean1 - mean2) /
                           std::sqrt(pooled * (1.0 / n1_ + 1.0 / static_cast<double>(n2)));
            }
        }
        stats_to_pvalues(stats, out);
    }

    std::optional<PValueLattice> marginal_lattice() const override {
        return uniform_grid_lattice(assignments_.size());
    }

private:
    DataMatrix data_;
    std::size_t n1_ = 0;
    AssignmentSet assignments_;
};

// |Spearman rho| marginals under full response permutations.
class SpearmanSource final : public PValueSource {
public:
    SpearmanSource(const DataMatrix& w, const PermutationPlan& plan) : data_(w) {
        if (w.n < 3) throw precondition_error("spearman requires n >= 3");
        perms_ = sample_permutations(plan, w.n);
        response_ranks_ = mid_ranks(std::span<const double>(w.response));
    }

    std::size_t num_hypotheses() const override { return data_.m; }
    std::size_t num_permutations() const override { return perms_.size(); }
    std::size_t identity_index() const override { return perms_.identity_index; }

    void permuted_pvalues(std::size_t j, std::span<double> out) const override {
        const auto feature_ranks = mid_ranks(data_.feature_row(j));
        std::vector<double> permuted(data_.n);
        std::vector<double> stats(perms_.size());
        for (std::size_t g = 0; g < perms_.size(); ++g) {
            const auto perm = perms_.row(g);
            for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = response_ranks_[perm[i]];
            stats[g] = std::abs(spearman_rho(feature_ranks, permuted));
        }
        stats_to_pvalues(stats, out);
    }

    std::optional<PValueLattice> marginal_lattice() const override {
        return uniform_grid_lattice(perms_.size());
    }

private:
    DataMatrix data_;
    PermutationSet perms_;
    std::vector<double> response_ranks_;
};

// Fisher's exact test on permuted label pairings. P-values are exact per
// table; identical tables across permutations share one evaluation.
class FisherSweepSource final : public PValueSource {
public:
    FisherSweepSource(const DataMatrix& w, const MarginalTest& test, const PermutationPlan& plan)
        : data_(w) {
        perms_ = sample_permutations(plan, w.n);
        options_.exact_budget = test.fisher_exact_budget;
        options_.mc_draws = test.fisher_mc_draws;
        options_.mc_seed = derive_seed(plan.seed, 0x46495348ULL);
        y_labels_.reserve(w.n);
        for (double v : w.response) {
            if (std::floor(v) != v) throw precondition_error("fisher test requires categorical response");
            y_labels_.push_back(static_cast<std::int64_t>(v));
        }
    }

    std::size_t num_hypotheses() const override { return data_.m; }
    std::size_t num_permutations() const override { return perms_.size(); }
    std::size_t identity_index() const override { return perms_.identity_index; }

    void permuted_pvalues(std::size_t j, std::span<double> out) const override {
        const auto feature = data_.feature_row(j);
        std::vector<std::int64_t> x_labels(data_.n);
        for (std::size_t i = 0; i < data_.n; ++i) {
            if (std::floor(feature[i]) != feature[i]) {
                throw precondition_error("fisher test requires categorical features");
            }
            x_labels[i] = static_cast<std::int64_t>(feature[i]);
        }
        std::map<std::vector<std::int64_t>, double> memo;
        std::vector<std::int64_t> permuted_y(data_.n);
        for (std::size_t g = 0; g < perms_.size(); ++g) {
            const auto perm = perms_.row(g);
            for (std::size_t i = 0; i < perm.size(); ++i) permuted_y[i] = y_labels_[perm[i]];
            const auto table = tabulate(x_labels, permuted_y);
            auto [it, inserted] = memo.try_emplace(table.counts, 0.0);
            if (inserted) it->second = fisher_exact_pvalue(table, options_).pvalue;
            out[g] = it->second;
        }
    }

private:
    DataMatrix data_;
    PermutationSet perms_;
    FisherOptions options_;
    std::vector<std::int64_t> y_labels_;
};

// Generic arrangement-statistic sweep with within-sample calibration.
class StatisticSweepSource final : public PValueSource {
public:
    StatisticSweepSource(const DataMatrix& w, StatisticFn statistic, const PermutationPlan& plan)
        : data_(w), statistic_(std::move(statistic)) {
        perms_ = sample_permutations(plan, w.n);
    }

    std::size_t num_hypotheses() const override { return data_.m; }
    std::size_t num_permutations() const override { return perms_.size(); }
    std::size_t identity_index() const override { return perms_.identity_index; }

    void permuted_pvalues(std::size_t j, std::span<double> out) const override {
        std::vector<double> stats(perms_.size());
        for (std::size_t g = 0; g < perms_.size(); ++g) {
            stats[g] = statistic_(j, perms_.row(g));
        }
        stats_to_pvalues(stats, out);
    }

    std::optional<PValueLattice> marginal_lattice() const override {
        return uniform_grid_lattice(perms_.size());
    }

private:
    DataMatrix data_;
    StatisticFn statistic_;
    PermutationSet perms_;
};

} // namespace

std::unique_ptr<PValueSource> make_sweep_source(const DataMatrix& w,
                                                const MarginalTest& test,
                                                const PermutationPlan& plan) {
    w.validate();
    switch (test.kind) {
        case TestKind::wilcoxon:
            return std::make_unique<WilcoxonSweepSource>(w, test, plan);
        case TestKind::permutation_t:
            return std::make_unique<PermutationTSource>(w, plan);
        case TestKind::spearman:
            return std::make_unique<SpearmanSource>(w, plan);
        case TestKind::fisher_exact:
            return std::make_unique<FisherSweepSource>(w, test, plan);
    }
    throw input_error("unhandled test kind");
}

std::unique_ptr<PValueSource> make_statistic_source(const DataMatrix& w,
                                                    StatisticFn statistic,
                                                    const PermutationPlan& plan) {
    w.validate();
    return std::make_unique<StatisticSweepSource>(w, std::move(statistic), plan);
}

std::size_t MinPDistribution::count_at_most(double x) const {
    return static_cast<std::size_t>(
        std::upper_bound(sorted_samples.begin(), sorted_samples.end(), x) - sorted_samples.begin());
}

const char* method_name(AdjustmentMethod method) {
    switch (method) {
        case AdjustmentMethod::wy_single_step: return "wy_single_step";
        case AdjustmentMethod::wy_step_down: return "wy_step_down";
        case AdjustmentMethod::bonferroni: return "bonferroni";
        case AdjustmentMethod::holm: return "holm";
        case AdjustmentMethod::oracle_single_step: return "oracle_single_step";
        case AdjustmentMethod::oracle_step_down: return "oracle_step_down";
    }
    return "unknown";
}

SweepResult sweep_minp(const PValueSource& source, unsigned threads) {
    const std::size_t m = source.num_hypotheses();
    const std::size_t permutations = source.num_permutations();
    const std::size_t identity = source.identity_index();

    SweepResult result;
    result.raw_pvalues.assign(m, 1.0);
    result.minp.identity_index = identity;

    std::vector<std::vector<double>> partial_minima;
    const unsigned workers = std::max(1u, threads);
    partial_minima.assign(workers, {});

    std::atomic<unsigned> next_slot{0};
    parallel_for(m, workers, [&](std::size_t begin, std::size_t end) {
        const unsigned slot = next_slot.fetch_add(1);
        auto& local_min = partial_minima[slot];
        local_min.assign(permutations, 1.0);
        std::vector<double> row(permutations);
        for (std::size_t j = begin; j < end; ++j) {
            source.permuted_pvalues(j, row);
            result.raw_pvalues[j] = row[identity];
            for (std::size_t g = 0; g < permutations; ++g) {
                local_min[g] = std::min(local_min[g], row[g]);
            }
        }
    });

    result.minp.samples.assign(permutations, 1.0);
    for (const auto& local : partial_minima) {
        if (local.empty()) continue;
        for (std::size_t g = 0; g < permutations; ++g) {
            result.minp.samples[g] = std::min(result.minp.samples[g], local[g]);
        }
    }
    result.minp.sorted_samples = result.minp.samples;
    std::sort(result.minp.sorted_samples.begin(), result.minp.sorted_samples.end());
    return result;
}

MinPDistribution minp_distribution(const PValueSource& source, unsigned threads) {
    return sweep_minp(source, threads).minp;
}

SweepResult shared_sweep(const PValueSource& source, unsigned threads) {
    return sweep_minp(source, threads);
}

double wy_threshold(const MinPDistribution& dist, const PValueLattice& candidates, double alpha) {
    if (dist.samples.empty()) throw precondition_error("empty min-p distribution");
    const double total = static_cast<double>(dist.samples.size());
    double best = 0.0;
    for (double s : candidates.values) {
        const double fraction = static_cast<double>(dist.count_at_most(s)) / total;
        if (fraction <= alpha) {
            best = std::max(best, s);
        } else {
            break;   // fractions are nondecreasing along the sorted lattice
        }
    }
    return best;
}

PValueLattice threshold_candidates(const PValueSource& source, const SweepResult& sweep) {
    if (auto lattice = source.marginal_lattice()) return *lattice;
    std::vector<double> values(sweep.minp.sorted_samples);
    values.insert(values.end(), sweep.raw_pvalues.begin(), sweep.raw_pvalues.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return {std::move(values)};
}

AdjustmentResult wy_adjusted_pvalues(const PValueSource& source, double alpha, unsigned threads) {
    return wy_adjusted_from_sweep(source, sweep_minp(source, threads), alpha);
}

AdjustmentResult wy_adjusted_from_sweep(const PValueSource& source, const SweepResult& sweep,
                                        double alpha) {
    const std::size_t m = source.num_hypotheses();
    const double total = static_cast<double>(sweep.minp.size());

    AdjustmentResult result;
    result.method = AdjustmentMethod::wy_single_step;
    result.alpha = alpha;
    result.raw_pvalues = sweep.raw_pvalues;
    result.adjusted_pvalues.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        result.adjusted_pvalues[j] =
            static_cast<double>(sweep.minp.count_at_most(sweep.raw_pvalues[j])) / total;
    }
    result.threshold = wy_threshold(sweep.minp, threshold_candidates(source, sweep), alpha);
    for (std::size_t j = 0; j < m; ++j) {
        if (result.adjusted_pvalues[j] <= alpha) {
            result.rejections.push_back(static_cast<std::uint32_t>(j));
        }
    }
    return result;
}

AdjustmentResult wy_stepdown(const PValueSource& source, double alpha, unsigned threads) {
    return wy_stepdown_from_sweep(source, sweep_minp(source, threads), alpha);
}

AdjustmentResult wy_stepdown_from_sweep(const PValueSource& source, const SweepResult& sweep,
                                        double alpha) {
    const std::size_t m = source.num_hypotheses();
    const std::size_t permutations = sweep.minp.size();
    const double total = static_cast<double>(permutations);

    // Hypotheses in ascending raw order; ties broken by index for determinism.
    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (sweep.raw_pvalues[a] != sweep.raw_pvalues[b]) {
            return sweep.raw_pvalues[a] < sweep.raw_pvalues[b];
        }
        return a < b;
    });

    // Successive minima from the largest raw p-value downward: after
    // incorporating order[k], running_min[g] is the min over hypotheses
    // ranked >= k of their permuted p-values.
    std::vector<double> running_min(permutations, 1.0);
    std::vector<double> row(permutations);
    std::vector<double> step_fraction(m, 1.0);
    for (std::size_t k = m; k-- > 0;) {
        source.permuted_pvalues(order[k], row);
        std::size_t at_most = 0;
        const double raw_k = sweep.raw_pvalues[order[k]];
        for (std::size_t g = 0; g < permutations; ++g) {
            running_min[g] = std::min(running_min[g], row[g]);
            if (running_min[g] <= raw_k) ++at_most;
        }
        step_fraction[k] = static_cast<double>(at_most) / total;
    }

    AdjustmentResult result;
    result.method = AdjustmentMethod::wy_step_down;
    result.alpha = alpha;
    result.raw_pvalues = sweep.raw_pvalues;
    result.adjusted_pvalues.assign(m, 1.0);
    double running_max = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        running_max = std::max(running_max, step_fraction[k]);
        result.adjusted_pvalues[order[k]] = running_max;
    }
    result.threshold = wy_threshold(sweep.minp, threshold_candidates(source, sweep), alpha);

    for (std::size_t k = 0; k < m; ++k) {
        if (result.adjusted_pvalues[order[k]] > alpha) break;
        result.rejections.push_back(order[k]);
    }
    std::sort(result.rejections.begin(), result.rejections.end());
    return result;
}

} // namespace wy
