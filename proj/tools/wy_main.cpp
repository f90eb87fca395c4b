#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wy/brute.hpp"
#include "wy/engine.hpp"
#include "wy/errors.hpp"
#include "wy/experiment.hpp"
#include "wy/fisher.hpp"
#include "wy/marginal_tests.hpp"
#include "wy/oracle.hpp"
#include "wy/partition_count.hpp"
#include "wy/sim_models.hpp"
#include "wy/threading.hpp"
#include "wy/wilcoxon.hpp"

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    unsigned threads = wy::default_thread_count();
    std::string format = "json";
    std::string out_dir = ".";
};

std::filesystem::path out_path(const GlobalOptions& global, const std::string& name) {
    std::filesystem::create_directories(global.out_dir);
    return std::filesystem::path(global.out_dir) / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw wy::input_error("cannot write " + path.string());
    out << text;
}

std::string adjust_table_csv(const wy::AdjustmentResult& result) {
    std::string csv = "hypothesis,raw_p,adjusted_p,rejected\n";
    std::vector<char> rejected(result.raw_pvalues.size(), 0);
    for (auto j : result.rejections) rejected[j] = 1;
    char line[128];
    for (std::size_t j = 0; j < result.raw_pvalues.size(); ++j) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%d\n", j + 1,
                      result.raw_pvalues[j], result.adjusted_pvalues[j], rejected[j] ? 1 : 0);
        csv += line;
    }
    return csv;
}

int run_adjust(const GlobalOptions& global, const std::string& data_path, bool header,
               const std::string& test_name, double alpha, std::size_t permutations,
               bool exhaustive, bool stepdown, const std::string& tie_policy,
               const std::string& response_type) {
    const auto start = std::chrono::steady_clock::now();

    wy::ResponseKind kind = wy::ResponseKind::numeric;
    bool auto_kind = response_type == "auto";
    if (response_type == "categorical") kind = wy::ResponseKind::categorical;
    const auto data = wy::read_delimited(data_path, header, kind, auto_kind);

    wy::MarginalTest test = wy::MarginalTest::from_name(test_name);
    test.tie_policy = tie_policy == "fallback" ? wy::TiePolicy::permissive : wy::TiePolicy::strict;
    test.inner_plan.count = permutations;
    test.inner_plan.seed = global.seed;

    wy::PermutationPlan plan;
    plan.mode = exhaustive ? wy::PermutationMode::exhaustive : wy::PermutationMode::sampled;
    plan.count = permutations;
    plan.seed = global.seed;

    const auto source = wy::make_sweep_source(data, test, plan);
    const auto result = stepdown ? wy::wy_stepdown(*source, alpha, global.threads)
                                 : wy::wy_adjusted_pvalues(*source, alpha, global.threads);
    const double elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();

    nlohmann::json summary;
    summary["method"] = wy::method_name(result.method);
    summary["alpha"] = alpha;
    summary["threshold"] = result.threshold;
    summary["hypotheses"] = data.m;
    summary["samples"] = data.n;
    summary["rejections"] = result.rejections.size();
    summary["plan"] = {
        {"mode", exhaustive ? "exhaustive" : "sampled"},
        {"permutations", source->num_permutations()},
        {"seed", global.seed},
        {"include_identity", plan.include_identity},
    };
    summary["test"] = test_name;
    summary["elapsed_seconds"] = elapsed;

    const std::string table = adjust_table_csv(result);
    write_text(out_path(global, "adjusted.csv"), table);
    write_text(out_path(global, "summary.json"), summary.dump(2) + "\n");

    if (global.format == "csv") std::cout << table;
    else std::cout << summary.dump(2) << "\n";
    return 0;
}

int run_oracle(const GlobalOptions& global, const std::string& scenario_path, double alpha,
               std::size_t sims, const std::string& test_name) {
    auto scenario = wy::load_scenario(scenario_path);
    if (global.seed != 0) scenario.seed = global.seed;
    const auto test = wy::MarginalTest::from_name(test_name);

    const auto estimate =
        wy::oracle_threshold_mc(scenario, test, alpha, sims, scenario.seed, global.threads);
    const auto fresh = wy::effective_level(scenario, test, estimate.threshold, sims,
                                           wy::derive_seed(scenario.seed, 0xF2E54ULL),
                                           global.threads);

    nlohmann::json doc;
    doc["alpha"] = alpha;
    doc["threshold"] = estimate.threshold;
    doc["effective_level"] = fresh.effective_level;
    doc["effective_level_stderr"] = fresh.mc_stderr;
    doc["calibration_level"] = estimate.effective_level;
    doc["n_sims"] = sims;
    write_text(out_path(global, "oracle.json"), doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int run_lattice(const GlobalOptions& global, std::size_t n, std::size_t n1) {
    wy::ExactLattice lattice;
    if (n1 == 0) {
        lattice = wy::wilcoxon_lattice(n);
    } else {
        if (n1 >= n) throw wy::input_error("need 0 < n1 < n");
        lattice = wy::rank_sum_null(n1, n - n1)->attainable_pvalues();
    }
    std::string csv = "index,numerator,denominator,value\n";
    char line[160];
    for (std::size_t i = 0; i < lattice.numerators.size(); ++i) {
        const double value = lattice.numerators[i].convert_to<double>() /
                             lattice.denominator.convert_to<double>();
        std::snprintf(line, sizeof(line), "%zu,%s,%s,%.17g\n", i,
                      lattice.numerators[i].str().c_str(), lattice.denominator.str().c_str(),
                      value);
        csv += line;
    }
    std::cout << csv;
    write_text(out_path(global, "lattice.csv"), csv);
    return 0;
}

int run_simulate(const GlobalOptions& global, const std::string& scenario_path,
                 std::size_t runs, std::size_t permutations, std::size_t oracle_sims,
                 double alpha, const std::vector<std::size_t>& grid_m,
                 const std::vector<double>& grid_rho, bool desk_preset, bool full_preset) {
    auto base = wy::load_scenario(scenario_path);
    if (global.seed != 0) base.seed = global.seed;

    std::vector<std::size_t> ms = grid_m.empty() ? std::vector<std::size_t>{base.m} : grid_m;
    std::vector<double> rhos = grid_rho.empty() ? std::vector<double>{base.rho} : grid_rho;
    if (desk_preset) {
        ms = {100, 1000};
        runs = std::min<std::size_t>(runs, 50);
        permutations = std::min<std::size_t>(permutations, 200);
    } else if (full_preset) {
        ms = {100, 1000, 10000};
        rhos = base.structure == wy::CovarianceStructure::toeplitz
                   ? std::vector<double>{0.95, 0.975, 0.99}
                   : std::vector<double>{0.6, 0.75, 0.9};
        runs = 250;
        permutations = 1000;
        oracle_sims = 1000;
    }

    wy::GridReport grid;
    for (auto m : ms) {
        for (auto rho : rhos) {
            wy::ExperimentConfig config;
            config.scenario = base;
            config.scenario.m = m;
            config.scenario.rho = rho;
            config.alpha = alpha;
            config.n_runs = runs;
            config.permutations = permutations;
            config.oracle_sims = oracle_sims;
            config.seed = base.seed;
            config.threads = global.threads;
            grid.cells.push_back(wy::run_experiment(config));

            const auto& report = grid.cells.back();
            std::cout << "cell m=" << m << " rho=" << rho << ":";
            for (const auto& summary : report.methods) {
                std::cout << " " << wy::method_name(summary.method) << " tp="
                          << summary.mean_true_positives << " fwer=" << summary.fwer << ";";
            }
            std::cout << "\n";
        }
    }

    wy::emit_csv(grid, out_path(global, "experiment.csv").string());
    wy::emit_json(grid, out_path(global, "experiment.json").string());
    wy::emit_svg(grid, out_path(global, "experiment.svg").string());
    if (global.format == "json") std::cout << wy::report_json(grid) << "\n";
    return 0;
}

int run_benchmark_cmd(const GlobalOptions& global, std::size_t m, std::size_t permutations,
                      std::size_t n) {
    const auto report = wy::run_benchmark(m, permutations, global.seed, global.threads, n);
    const auto json = wy::benchmark_json(report);
    write_text(out_path(global, "benchmark.json"), json + "\n");
    std::cout << json << "\n";
    return 0;
}

int run_verify(std::size_t max_n) {
    std::size_t failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
        if (!ok) ++failures;
    };

    for (std::size_t n = 4; n <= max_n; n += 2) {
        const auto formula = wy::wilcoxon_lattice(n);
        const auto enumerated = wy::brute::lattice_by_enumeration(n / 2, n / 2);
        bool same = formula.numerators == enumerated.numerators &&
                    formula.denominator == enumerated.denominator;

        const auto dp = wy::rank_sum_null(n / 2, n / 2);
        const auto brute = wy::brute::wilcoxon_null_by_enumeration(n / 2, n / 2);
        bool dist_same = dp->total() == brute.total;
        for (std::size_t s = brute.min_sum; dist_same && s <= brute.max_sum; ++s) {
            dist_same = dp->count(s) == brute.counts[s - brute.min_sum];
        }
        check("lattice formula vs enumeration, n=" + std::to_string(n), same);
        check("rank-sum distribution vs enumeration, n=" + std::to_string(n), dist_same);
    }

    {
        bool ok = true;
        for (std::size_t n = 0; n <= 8 && ok; ++n) {
            for (std::size_t j = 0; j <= 32 && ok; ++j) {
                ok = wy::partition_count(n, j) == wy::brute::partition_count_by_enumeration(n, j);
            }
        }
        check("bounded partition counts vs enumeration (n<=8, j<=32)", ok);
    }

    {
        // Shared sweep vs the nested two-round oracle on an exhaustive plan.
        wy::Rng rng(20240607ULL);
        std::vector<double> response = {1, 1, 1, 2, 2, 2};
        std::vector<double> features(3 * 6);
        for (auto& v : features) v = rng.next_normal();
        const auto data = wy::make_data_matrix(response, features, wy::ResponseKind::categorical);

        wy::PermutationPlan plan;
        plan.mode = wy::PermutationMode::exhaustive;
        auto statistic = [&](std::size_t j, std::span<const std::uint32_t> perm) {
            std::vector<double> g1, g2;
            const auto row = data.feature_row(j);
            for (std::size_t i = 0; i < perm.size(); ++i) {
                (data.response[perm[i]] == 1.0 ? g1 : g2).push_back(row[i]);
            }
            return wy::abs_t_statistic(g1, g2);
        };
        const auto source = wy::make_statistic_source(data, statistic, plan);
        const auto fast = wy::shared_sweep(*source);
        const auto naive = wy::brute::naive_two_round(data, statistic, plan);
        bool ok = fast.raw_pvalues == naive.raw_pvalues && fast.minp.samples == naive.minp.samples;
        check("shared sweep vs naive two-round (n=6, m=3, exhaustive)", ok);
    }

    {
        const auto exact = wy::fisher_2x2_exact(1, 9, 11, 3);
        const auto fast = wy::fisher_exact_pvalue(
            wy::ContingencyTable{2, 2, {1, 9, 11, 3}});
        bool ok = std::abs(fast.pvalue - exact.value()) <= 1e-12 * exact.value();
        check("fisher 2x2 fast path vs exact rational", ok);
    }

    std::cout << (failures == 0 ? "verify: all checks passed\n"
                                : "verify: " + std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Westfall-Young permutation multiple testing toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions global;
    app.add_option("--seed", global.seed, "master seed");
    app.add_option("--threads", global.threads, "worker threads");
    app.add_option("--format", global.format, "stdout payload: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", global.out_dir, "output directory");

    // adjust
    auto* adjust = app.add_subcommand("adjust", "multiplicity-adjusted p-values for a data file");
    std::string data_path, test_name = "wilcoxon", tie_policy = "strict", response_type = "auto";
    double alpha = 0.05;
    std::size_t permutations = 1000;
    bool header = false, exhaustive = false, stepdown = false;
    adjust->add_option("--data", data_path, "delimited data file")->required();
    adjust->add_flag("--header", header, "skip a leading column-name row");
    adjust->add_option("--test", test_name, "wilcoxon|perm-t|spearman|fisher");
    adjust->add_option("--alpha", alpha, "significance level");
    adjust->add_option("--permutations", permutations, "sampled permutation count");
    adjust->add_flag("--exhaustive", exhaustive, "enumerate all distinct rearrangements");
    adjust->add_flag("--stepdown", stepdown, "step-down procedure");
    adjust->add_option("--ties", tie_policy, "strict|fallback")
        ->check(CLI::IsMember({"strict", "fallback"}));
    adjust->add_option("--response", response_type, "auto|numeric|categorical")
        ->check(CLI::IsMember({"auto", "numeric", "categorical"}));

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Monte Carlo optimal-threshold estimate");
    std::string scenario_path;
    std::size_t sims = 1000;
    std::string oracle_test = "wilcoxon";
    oracle->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    oracle->add_option("--alpha", alpha, "significance level");
    oracle->add_option("--sims", sims, "simulation count");
    oracle->add_option("--test", oracle_test, "marginal test");

    // lattice
    auto* lattice = app.add_subcommand("lattice", "attainable rank-sum p-values");
    std::size_t lattice_n = 0, lattice_n1 = 0;
    lattice->add_option("--n", lattice_n, "total sample size")->required();
    lattice->add_option("--n1", lattice_n1, "group-1 size (defaults to n/2)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run the power/error experiment");
    std::string sim_scenario;
    std::size_t runs = 250, oracle_sims = 1000;
    std::vector<std::size_t> grid_m;
    std::vector<double> grid_rho;
    bool desk = false, full = false;
    std::size_t sim_permutations = 1000;
    simulate->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
    simulate->add_option("--runs", runs, "simulation runs per cell");
    simulate->add_option("--permutations", sim_permutations, "permutations per run");
    simulate->add_option("--oracle-sims", oracle_sims, "null simulations for calibration");
    simulate->add_option("--alpha", alpha, "significance level");
    simulate->add_option("--grid-m", grid_m, "hypothesis counts (grid)");
    simulate->add_option("--grid-rho", grid_rho, "correlation values (grid)");
    simulate->add_flag("--desk", desk, "desk-scale preset (m in {100,1000}, 50 runs, 200 perms)");
    simulate->add_flag("--full", full,
                       "full study grid (m in {100,1000,10000}, 250 runs, 1000 perms)");

    // benchmark
    auto* benchmark = app.add_subcommand("benchmark", "time the min-p sweep");
    std::size_t bench_m = 10000, bench_perms = 1000, bench_n = 100;
    benchmark->add_option("--m", bench_m, "hypothesis count");
    benchmark->add_option("--permutations", bench_perms, "permutation count");
    benchmark->add_option("--n", bench_n, "sample count (even)");

    // verify
    auto* verify = app.add_subcommand("verify", "cross-check fast paths against enumeration");
    std::size_t verify_max_n = 12;
    verify->add_option("--max-n", verify_max_n, "largest even n for enumeration checks");

    try {
        app.parse(argc, argv);
        if (adjust->parsed()) {
            return run_adjust(global, data_path, header, test_name, alpha, permutations,
                              exhaustive, stepdown, tie_policy, response_type);
        }
        if (oracle->parsed()) {
            return run_oracle(global, scenario_path, alpha, sims, oracle_test);
        }
        if (lattice->parsed()) {
            return run_lattice(global, lattice_n, lattice_n1);
        }
        if (simulate->parsed()) {
            return run_simulate(global, sim_scenario, runs, sim_permutations, oracle_sims,
                                alpha, grid_m, grid_rho, desk, full);
        }
        if (benchmark->parsed()) {
            return run_benchmark_cmd(global, bench_m, bench_perms, bench_n);
        }
        if (verify->parsed()) {
            return run_verify(verify_max_n);
        }
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const wy::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const wy::precondition_error& e) {
        std::cerr << "precondition error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
