#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>

#include "wy/brute.hpp"
#include "wy/engine.hpp"
#include "wy/errors.hpp"
#include "wy/marginal_tests.hpp"
#include "wy/rng.hpp"
#include "wy/wilcoxon.hpp"

using namespace wy;

namespace {

DataMatrix random_two_group(std::size_t m, std::size_t n, std::uint64_t seed) {
    Rng rng(seed, 0);
    std::vector<double> response(n);
    for (std::size_t i = 0; i < n; ++i) response[i] = i < n / 2 ? 1.0 : 2.0;
    std::vector<double> features(m * n);
    for (auto& v : features) v = rng.next_normal();
    return make_data_matrix(std::move(response), std::move(features), ResponseKind::categorical);
}

PermutationPlan exhaustive_plan() {
    PermutationPlan plan;
    plan.mode = PermutationMode::exhaustive;
    return plan;
}

PermutationPlan sampled_plan(std::size_t count, std::uint64_t seed) {
    PermutationPlan plan;
    plan.count = count;
    plan.seed = seed;
    return plan;
}

} // namespace

TEST_CASE("single hypothesis, exhaustive: min-p CDF is uniform on the lattice") {
    const auto data = random_two_group(1, 6, 41);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, exhaustive_plan());
    const auto dist = minp_distribution(*source);
    REQUIRE(dist.size() == 20);

    const auto lattice = wilcoxon_lattice(6).to_doubles();
    for (double s : lattice.values) {
        CHECK(dist.cdf(s) == doctest::Approx(s).epsilon(1e-15));
    }
}

TEST_CASE("identity-only plan produces the single sample min_j p_j(W)") {
    const auto data = random_two_group(5, 8, 42);
    MarginalTest test;
    PermutationPlan plan = sampled_plan(0, 0);   // identity only
    const auto source = make_sweep_source(data, test, plan);
    const auto sweep = sweep_minp(*source);
    REQUIRE(sweep.minp.size() == 1);
    CHECK(sweep.minp.samples[0] ==
          *std::min_element(sweep.raw_pvalues.begin(), sweep.raw_pvalues.end()));
}

TEST_CASE("perfectly dependent duplicates collapse to the single-feature distribution") {
    const auto base = random_two_group(1, 8, 43);
    std::vector<double> duplicated;
    for (int copy = 0; copy < 4; ++copy) {
        duplicated.insert(duplicated.end(), base.features.begin(), base.features.end());
    }
    const auto data =
        make_data_matrix(base.response, std::move(duplicated), ResponseKind::categorical);

    MarginalTest test;
    const auto one = minp_distribution(*make_sweep_source(base, test, exhaustive_plan()));
    const auto four = minp_distribution(*make_sweep_source(data, test, exhaustive_plan()));
    CHECK(one.samples == four.samples);
}

TEST_CASE("threshold selection follows the quantile convention") {
    // Lattice {1/3, 2/3, 1} with samples uniform over it.
    MinPDistribution dist;
    dist.samples = {1.0 / 3, 1.0 / 3, 2.0 / 3, 2.0 / 3, 1.0, 1.0};
    dist.sorted_samples = dist.samples;
    std::sort(dist.sorted_samples.begin(), dist.sorted_samples.end());
    const PValueLattice lattice{{1.0 / 3, 2.0 / 3, 1.0}};

    CHECK(wy_threshold(dist, lattice, 0.05) == 0.0);          // empty candidate set
    CHECK(wy_threshold(dist, lattice, 0.40) == 1.0 / 3);
    CHECK(wy_threshold(dist, lattice, 1.0) == 1.0);
}

TEST_CASE("adjusted p-values: raw of 1 adjusts to 1") {
    const auto data = random_two_group(3, 8, 44);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, sampled_plan(200, 9));
    const auto result = wy_adjusted_pvalues(*source, 0.05);
    for (std::size_t j = 0; j < data.m; ++j) {
        if (result.raw_pvalues[j] == 1.0) CHECK(result.adjusted_pvalues[j] == 1.0);
        CHECK(result.adjusted_pvalues[j] >= result.raw_pvalues[j] - 1e-15);
    }
}

TEST_CASE("single hypothesis, exhaustive: adjusted equals raw") {
    const auto data = random_two_group(1, 8, 45);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, exhaustive_plan());
    const auto result = wy_adjusted_pvalues(*source, 0.05);
    CHECK(result.adjusted_pvalues[0] == doctest::Approx(result.raw_pvalues[0]).epsilon(1e-15));
}

TEST_CASE("duplicated features: adjusted equals raw for each copy") {
    const auto base = random_two_group(1, 8, 46);
    std::vector<double> duplicated;
    for (int copy = 0; copy < 3; ++copy) {
        duplicated.insert(duplicated.end(), base.features.begin(), base.features.end());
    }
    const auto data =
        make_data_matrix(base.response, std::move(duplicated), ResponseKind::categorical);
    MarginalTest test;
    const auto result = wy_adjusted_pvalues(*make_sweep_source(data, test, exhaustive_plan()), 0.05);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(result.adjusted_pvalues[j] ==
              doctest::Approx(result.raw_pvalues[j]).epsilon(1e-15));
    }
}

TEST_CASE("threshold/adjusted duality holds on an alpha grid") {
    const auto data = random_two_group(4, 8, 47);
    MarginalTest test;
    for (bool exhaustive : {true, false}) {
        const auto plan = exhaustive ? exhaustive_plan() : sampled_plan(157, 11);
        const auto source = make_sweep_source(data, test, plan);
        const auto sweep = sweep_minp(*source);
        const auto candidates = threshold_candidates(*source, sweep);
        for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.33, 0.5, 0.75, 0.9}) {
            const auto result = wy_adjusted_from_sweep(*source, sweep, alpha);
            const double threshold = wy_threshold(sweep.minp, candidates, alpha);
            std::vector<std::uint32_t> by_threshold;
            for (std::size_t j = 0; j < data.m; ++j) {
                if (sweep.raw_pvalues[j] <= threshold) {
                    by_threshold.push_back(static_cast<std::uint32_t>(j));
                }
            }
            CHECK(result.rejections == by_threshold);
        }
    }
}

TEST_CASE("threshold is nondecreasing in alpha") {
    const auto data = random_two_group(5, 8, 48);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, sampled_plan(99, 5));
    const auto sweep = sweep_minp(*source);
    const auto candidates = threshold_candidates(*source, sweep);
    double previous = -1.0;
    for (double alpha = 0.02; alpha <= 1.0; alpha += 0.02) {
        const double threshold = wy_threshold(sweep.minp, candidates, alpha);
        CHECK(threshold >= previous);
        previous = threshold;
    }
}

TEST_CASE("adjusted p-values are equivariant under hypothesis relabeling") {
    const auto data = random_two_group(5, 8, 49);
    const std::vector<std::size_t> shuffle = {3, 0, 4, 1, 2};
    std::vector<double> permuted_features(data.features.size());
    for (std::size_t j = 0; j < 5; ++j) {
        const auto row = data.feature_row(shuffle[j]);
        std::copy(row.begin(), row.end(), permuted_features.begin() + j * data.n);
    }
    const auto permuted =
        make_data_matrix(data.response, std::move(permuted_features), ResponseKind::categorical);

    MarginalTest test;
    const auto plan = sampled_plan(120, 77);
    const auto a = wy_adjusted_pvalues(*make_sweep_source(data, test, plan), 0.05);
    const auto b = wy_adjusted_pvalues(*make_sweep_source(permuted, test, plan), 0.05);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(b.adjusted_pvalues[j] == a.adjusted_pvalues[shuffle[j]]);
    }
}

TEST_CASE("step-down equals single-step for one hypothesis") {
    const auto data = random_two_group(1, 8, 50);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, exhaustive_plan());
    const auto single = wy_adjusted_pvalues(*source, 0.2);
    const auto down = wy_stepdown(*source, 0.2);
    CHECK(single.adjusted_pvalues[0] == down.adjusted_pvalues[0]);
    CHECK(single.rejections == down.rejections);
}

TEST_CASE("step-down rejections contain the single-step rejections") {
    for (std::uint64_t seed : {60ULL, 61ULL, 62ULL, 63ULL}) {
        auto data = random_two_group(6, 10, seed);
        // inject a real shift so rejections actually occur
        for (std::size_t j = 0; j < 2; ++j) {
            auto row = data.feature_row(j);
            for (std::size_t i = data.n / 2; i < data.n; ++i) row[i] += 3.0;
        }
        MarginalTest test;
        const auto source = make_sweep_source(data, test, sampled_plan(400, seed));
        const auto sweep = sweep_minp(*source);
        const auto single = wy_adjusted_from_sweep(*source, sweep, 0.1);
        const auto down = wy_stepdown_from_sweep(*source, sweep, 0.1);

        std::set<std::uint32_t> down_set(down.rejections.begin(), down.rejections.end());
        for (auto j : single.rejections) CHECK(down_set.count(j) == 1);
        for (std::size_t j = 0; j < data.m; ++j) {
            CHECK(down.adjusted_pvalues[j] <= single.adjusted_pvalues[j] + 1e-15);
        }
    }
}

TEST_CASE("step-down adjusted values are monotone in the raw ordering") {
    const auto data = random_two_group(8, 10, 70);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, sampled_plan(300, 7));
    const auto result = wy_stepdown(*source, 0.05);

    std::vector<std::size_t> order(data.m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return result.raw_pvalues[a] < result.raw_pvalues[b];
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        CHECK(result.adjusted_pvalues[order[k]] >= result.adjusted_pvalues[order[k - 1]]);
    }
}

TEST_CASE("equal raw p-values make step-down equal to single-step") {
    // Three identical features on n = 6: every raw and permuted p coincides.
    const auto base = random_two_group(1, 6, 71);
    std::vector<double> duplicated;
    for (int copy = 0; copy < 3; ++copy) {
        duplicated.insert(duplicated.end(), base.features.begin(), base.features.end());
    }
    const auto data =
        make_data_matrix(base.response, std::move(duplicated), ResponseKind::categorical);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, exhaustive_plan());
    const auto single = wy_adjusted_pvalues(*source, 0.4);
    const auto down = wy_stepdown(*source, 0.4);
    CHECK(single.adjusted_pvalues == down.adjusted_pvalues);
    CHECK(single.rejections == down.rejections);
}

TEST_CASE("shared sweep equals the naive two-round oracle on exhaustive plans") {
    const auto data = random_two_group(3, 6, 72);
    const auto plan = exhaustive_plan();

    // Arrangement statistic: |t| on the two groups induced by the permuted
    // labels. (The hypothesis data stay put; labels move.)
    std::atomic<std::size_t> evaluations{0};
    StatisticFn statistic = [&](std::size_t j, std::span<const std::uint32_t> perm) {
        ++evaluations;
        std::vector<double> g1, g2;
        const auto row = data.feature_row(j);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            (data.response[perm[i]] == 1.0 ? g1 : g2).push_back(row[i]);
        }
        return abs_t_statistic(g1, g2);
    };

    const auto source = make_statistic_source(data, statistic, plan);
    evaluations = 0;
    const auto fast = shared_sweep(*source);
    // one sweep costs exactly m * P statistic evaluations
    CHECK(evaluations.load() == data.m * source->num_permutations());

    const auto naive = brute::naive_two_round(data, statistic, plan);
    CHECK(fast.raw_pvalues == naive.raw_pvalues);
    CHECK(fast.minp.samples == naive.minp.samples);
}

TEST_CASE("shared sweep with one hypothesis returns within-sample ranks over the plan") {
    const auto data = random_two_group(1, 6, 73);
    StatisticFn statistic = [&](std::size_t, std::span<const std::uint32_t> perm) {
        std::vector<double> g1, g2;
        const auto row = data.feature_row(0);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            (data.response[perm[i]] == 1.0 ? g1 : g2).push_back(row[i]);
        }
        return abs_t_statistic(g1, g2);
    };
    const auto source = make_statistic_source(data, statistic, exhaustive_plan());
    const auto sweep = shared_sweep(*source);
    CHECK(sweep.minp.samples.size() == 720);
    // m = 1: the min-p samples are the marginal p-values themselves, i.e.
    // within-sample ranks divided by the plan size.
    std::vector<double> sorted(sweep.minp.samples);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), sorted[k]) - sorted.begin();
        CHECK(count == std::llround(sorted[k] * 720));
    }
}

TEST_CASE("identity-only plans give all-ones p-values in the naive oracle") {
    const auto data = random_two_group(2, 6, 74);
    StatisticFn statistic = [&](std::size_t j, std::span<const std::uint32_t> perm) {
        std::vector<double> g1, g2;
        const auto row = data.feature_row(j);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            (data.response[perm[i]] == 1.0 ? g1 : g2).push_back(row[i]);
        }
        return abs_t_statistic(g1, g2);
    };
    PermutationPlan plan = sampled_plan(0, 0);
    const auto naive = brute::naive_two_round(data, statistic, plan);
    CHECK(naive.raw_pvalues == std::vector<double>{1.0, 1.0});
    CHECK(naive.minp.samples == std::vector<double>{1.0});
}

TEST_CASE("results are bit-identical across worker counts and repeated runs") {
    const auto data = random_two_group(12, 10, 75);
    MarginalTest test;
    const auto source = make_sweep_source(data, test, sampled_plan(250, 99));
    const auto first = wy_adjusted_pvalues(*source, 0.05, 1);
    const auto four_workers = wy_adjusted_pvalues(*source, 0.05, 4);
    const auto again = wy_adjusted_pvalues(*source, 0.05, 1);

    CHECK(first.raw_pvalues == four_workers.raw_pvalues);
    CHECK(first.adjusted_pvalues == four_workers.adjusted_pvalues);
    CHECK(first.threshold == four_workers.threshold);
    CHECK(first.rejections == four_workers.rejections);
    CHECK(first.adjusted_pvalues == again.adjusted_pvalues);

    const auto down1 = wy_stepdown(*source, 0.05, 1);
    const auto down4 = wy_stepdown(*source, 0.05, 4);
    CHECK(down1.adjusted_pvalues == down4.adjusted_pvalues);
    CHECK(down1.rejections == down4.rejections);
}

TEST_CASE("sweep sources propagate marginal test errors") {
    auto data = random_two_group(2, 8, 76);
    auto row = data.feature_row(0);
    row[1] = row[0];   // tie within the pooled sample
    MarginalTest strict;
    CHECK_THROWS_AS((void)make_sweep_source(data, strict, sampled_plan(10, 1)),
                    precondition_error);

    MarginalTest permissive;
    permissive.tie_policy = TiePolicy::permissive;
    const auto source = make_sweep_source(data, permissive, sampled_plan(50, 1));
    const auto result = wy_adjusted_pvalues(*source, 0.05);
    for (double p : result.raw_pvalues) {
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("all p-values from every source lie in (0, 1]") {
    const auto data = random_two_group(4, 8, 77);
    for (const char* name : {"wilcoxon", "perm-t"}) {
        auto test = MarginalTest::from_name(name);
        const auto source = make_sweep_source(data, test, sampled_plan(60, 3));
        std::vector<double> row(source->num_permutations());
        for (std::size_t j = 0; j < source->num_hypotheses(); ++j) {
            source->permuted_pvalues(j, row);
            for (double p : row) {
                CHECK(p > 0.0);
                CHECK(p <= 1.0);
            }
        }
    }
}

TEST_CASE("spearman sweep source handles continuous responses") {
    Rng rng(456, 0);
    std::vector<double> response(7), features(2 * 7);
    for (auto& v : response) v = rng.next_normal();
    for (auto& v : features) v = rng.next_normal();
    const auto data = make_data_matrix(response, features, ResponseKind::numeric);

    auto test = MarginalTest::from_name("spearman");
    const auto source = make_sweep_source(data, test, sampled_plan(80, 4));
    const auto result = wy_adjusted_pvalues(*source, 0.05);
    CHECK(result.raw_pvalues.size() == 2);
    for (double p : result.raw_pvalues) {
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("fisher sweep source runs on categorical data") {
    const std::vector<double> response = {1, 1, 1, 1, 2, 2, 2, 2};
    const std::vector<double> features = {0, 0, 1, 1, 1, 1, 0, 1,
                                          1, 0, 1, 0, 0, 1, 0, 1};
    const auto data = make_data_matrix(response, features, ResponseKind::categorical);
    auto test = MarginalTest::from_name("fisher");
    const auto source = make_sweep_source(data, test, sampled_plan(40, 6));
    const auto result = wy_adjusted_pvalues(*source, 0.05);
    for (double p : result.raw_pvalues) {
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
    }
}
