#include "wy/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wy/errors.hpp"
#include "wy/oracle.hpp"
#include "wy/wilcoxon.hpp"
#include "wy/threading.hpp"

namespace wy {

namespace {

constexpr std::uint64_t kPlanTag = 0x504c414eULL;
constexpr std::uint64_t kOracleTag = 0x4f524143ULL;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

std::size_t true_positive_count(const std::vector<std::uint32_t>& rejections,
                                const std::vector<char>& is_alternative) {
    std::size_t count = 0;
    for (auto j : rejections) count += is_alternative[j] ? 1 : 0;
    return count;
}

bool any_false_rejection(const std::vector<std::uint32_t>& rejections,
                         const std::vector<char>& is_alternative) {
    for (auto j : rejections) {
        if (!is_alternative[j]) return true;
    }
    return false;
}

std::string cpu_model() {
    std::ifstream info("/proc/cpuinfo");
    std::string line;
    while (std::getline(info, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos && colon + 2 <= line.size()) {
                return line.substr(colon + 2);
            }
        }
    }
    return "unknown";
}

} // namespace

const MethodSummary* ExperimentReport::find(AdjustmentMethod method) const {
    for (const auto& summary : methods) {
        if (summary.method == method) return &summary;
    }
    return nullptr;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.scenario.validate();
    if (config.n_runs == 0) throw input_error("experiment needs n_runs >= 1");

    const auto wall_start = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.config = config;

    const bool wants_wy =
        std::count(config.methods.begin(), config.methods.end(), AdjustmentMethod::wy_single_step) +
        std::count(config.methods.begin(), config.methods.end(), AdjustmentMethod::wy_step_down) > 0;
    const bool wants_oracle =
        std::count(config.methods.begin(), config.methods.end(), AdjustmentMethod::oracle_single_step) +
        std::count(config.methods.begin(), config.methods.end(), AdjustmentMethod::oracle_step_down) > 0;

    for (auto method : config.methods) {
        MethodSummary summary;
        summary.method = method;
        summary.true_positives_by_run.reserve(config.n_runs);
        summary.false_rejection_by_run.reserve(config.n_runs);
        report.methods.push_back(std::move(summary));
    }
    auto summary_for = [&](AdjustmentMethod method) -> MethodSummary& {
        for (auto& s : report.methods) {
            if (s.method == method) return s;
        }
        throw input_error("method not configured");
    };

    // Null calibration is shared across runs; its simulations are keyed off
    // a dedicated seed stream so they stay independent of the run data.
    std::unique_ptr<OracleCalibration> calibration;
    if (wants_oracle) {
        const auto t0 = std::chrono::steady_clock::now();
        calibration = std::make_unique<OracleCalibration>(
            config.scenario, config.test, config.oracle_sims,
            derive_seed(config.seed, kOracleTag), config.threads);
        report.timings.oracle_seconds += seconds_since(t0);
    }

    for (std::size_t run = 0; run < config.n_runs; ++run) {
        auto t0 = std::chrono::steady_clock::now();
        const auto dataset = generate_dataset(config.scenario, run);
        report.timings.generate_seconds += seconds_since(t0);

        std::vector<char> is_alternative(config.scenario.m, 0);
        for (auto j : dataset.partition.alternatives) is_alternative[j] = 1;

        t0 = std::chrono::steady_clock::now();
        const auto raw = marginal_pvalues(dataset.data, config.test);
        report.timings.marginals_seconds += seconds_since(t0);

        auto record = [&](AdjustmentMethod method, const std::vector<std::uint32_t>& rejections) {
            auto& summary = summary_for(method);
            summary.true_positives_by_run.push_back(
                static_cast<double>(true_positive_count(rejections, is_alternative)));
            summary.false_rejection_by_run.push_back(
                any_false_rejection(rejections, is_alternative) ? 1 : 0);
        };

        for (auto method : config.methods) {
            switch (method) {
                case AdjustmentMethod::bonferroni:
                    record(method, bonferroni_reject(raw, config.alpha));
                    break;
                case AdjustmentMethod::holm:
                    record(method, holm_reject(raw, config.alpha));
                    break;
                case AdjustmentMethod::oracle_single_step: {
                    t0 = std::chrono::steady_clock::now();
                    const double threshold = calibration->single_step_threshold(
                        dataset.partition.true_nulls, config.alpha);
                    std::vector<std::uint32_t> rejections;
                    for (std::size_t j = 0; j < raw.size(); ++j) {
                        if (raw[j] <= threshold) rejections.push_back(static_cast<std::uint32_t>(j));
                    }
                    record(method, rejections);
                    report.timings.oracle_seconds += seconds_since(t0);
                    break;
                }
                case AdjustmentMethod::oracle_step_down: {
                    t0 = std::chrono::steady_clock::now();
                    record(method, calibration->step_down_reject(
                                       raw, dataset.partition.true_nulls, config.alpha));
                    report.timings.oracle_seconds += seconds_since(t0);
                    break;
                }
                case AdjustmentMethod::wy_single_step:
                case AdjustmentMethod::wy_step_down:
                    break;   // handled jointly below to share the sweep
            }
        }

        if (wants_wy) {
            t0 = std::chrono::steady_clock::now();
            PermutationPlan plan;
            plan.mode = PermutationMode::sampled;
            plan.count = config.permutations;
            plan.seed = derive_seed(config.seed, kPlanTag, run);
            plan.include_identity = true;
            const auto source = make_sweep_source(dataset.data, config.test, plan);
            const auto sweep = sweep_minp(*source, config.threads);
            for (auto method : config.methods) {
                if (method == AdjustmentMethod::wy_single_step) {
                    record(method, wy_adjusted_from_sweep(*source, sweep, config.alpha).rejections);
                } else if (method == AdjustmentMethod::wy_step_down) {
                    record(method, wy_stepdown_from_sweep(*source, sweep, config.alpha).rejections);
                }
            }
            report.timings.wy_seconds += seconds_since(t0);
        }
    }

    const double runs = static_cast<double>(config.n_runs);
    for (auto& summary : report.methods) {
        double tp_sum = 0.0, tp_sq = 0.0, fr_sum = 0.0;
        for (double tp : summary.true_positives_by_run) {
            tp_sum += tp;
            tp_sq += tp * tp;
        }
        for (char fr : summary.false_rejection_by_run) fr_sum += fr;
        summary.mean_true_positives = tp_sum / runs;
        const double tp_var =
            std::max(0.0, tp_sq / runs - summary.mean_true_positives * summary.mean_true_positives);
        summary.se_true_positives = std::sqrt(tp_var / runs);
        summary.fwer = fr_sum / runs;
        summary.se_fwer = std::sqrt(summary.fwer * (1.0 - summary.fwer) / runs);
    }
    report.timings.total_seconds = seconds_since(wall_start);
    return report;
}

namespace {

nlohmann::json config_json(const ExperimentConfig& config) {
    nlohmann::json j;
    j["scenario"] = nlohmann::json::parse(scenario_to_json(config.scenario));
    j["alpha"] = config.alpha;
    j["n_runs"] = config.n_runs;
    j["permutations"] = config.permutations;
    j["oracle_sims"] = config.oracle_sims;
    j["seed"] = config.seed;
    nlohmann::json methods = nlohmann::json::array();
    for (auto method : config.methods) methods.push_back(method_name(method));
    j["methods"] = methods;
    return j;
}

} // namespace

std::string report_json(const GridReport& grid) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& report : grid.cells) {
        nlohmann::json cell;
        cell["config"] = config_json(report.config);
        nlohmann::json methods = nlohmann::json::array();
        for (const auto& summary : report.methods) {
            methods.push_back({
                {"method", method_name(summary.method)},
                {"mean_true_positives", summary.mean_true_positives},
                {"se_true_positives", summary.se_true_positives},
                {"fwer", summary.fwer},
                {"se_fwer", summary.se_fwer},
            });
        }
        cell["methods"] = methods;
        cell["timing"] = {
            {"generate_seconds", report.timings.generate_seconds},
            {"marginals_seconds", report.timings.marginals_seconds},
            {"wy_seconds", report.timings.wy_seconds},
            {"oracle_seconds", report.timings.oracle_seconds},
            {"total_seconds", report.timings.total_seconds},
        };
        cells.push_back(std::move(cell));
    }
    nlohmann::json doc;
    doc["cells"] = std::move(cells);
    return doc.dump(2);
}

void emit_json(const GridReport& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path);
    out << report_json(grid) << "\n";
}

void emit_csv(const GridReport& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path);
    out << "m,rho,structure,method,mean_true_positives,se_true_positives,fwer,se_fwer\n";
    for (const auto& report : grid.cells) {
        const auto& sc = report.config.scenario;
        const char* structure = sc.structure == CovarianceStructure::block ? "block"
                               : sc.structure == CovarianceStructure::toeplitz ? "toeplitz"
                                                                               : "independent";
        for (const auto& summary : report.methods) {
            out << sc.m << ',' << format_double(sc.rho) << ',' << structure << ','
                << method_name(summary.method) << ','
                << format_double(summary.mean_true_positives) << ','
                << format_double(summary.se_true_positives) << ','
                << format_double(summary.fwer) << ','
                << format_double(summary.se_fwer) << "\n";
        }
    }
}

void emit_svg(const GridReport& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path);

    const double bar_width = 18.0, bar_gap = 4.0, group_gap = 40.0;
    const double plot_height = 220.0, margin_left = 60.0, margin_top = 40.0, margin_bottom = 70.0;
    const std::size_t methods = grid.cells.empty() ? 0 : grid.cells.front().methods.size();
    const double group_width = methods * (bar_width + bar_gap);
    const double width =
        margin_left + grid.cells.size() * (group_width + group_gap) + 40.0;
    const double height = margin_top + plot_height + margin_bottom;

    double max_tp = 1.0;
    for (const auto& cell : grid.cells) {
        for (const auto& summary : cell.methods) {
            max_tp = std::max(max_tp, summary.mean_true_positives);
        }
    }

    static const char* palette[] = {"#c6dbef", "#9ecae1", "#969696", "#636363",
                                    "#252525", "#000000"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<text x=\"" << margin_left << "\" y=\"20\" font-size=\"14\">"
        << "Average true positives per method</text>\n";
    // y axis with four ticks
    out << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top << "\" x2=\"" << margin_left
        << "\" y2=\"" << margin_top + plot_height << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double value = max_tp * tick / 4.0;
        const double y = margin_top + plot_height - plot_height * tick / 4.0;
        out << "<line x1=\"" << margin_left - 4 << "\" y1=\"" << y << "\" x2=\"" << margin_left
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
        char label[32];
        std::snprintf(label, sizeof(label), "%.1f", value);
        out << "<text x=\"" << margin_left - 8 << "\" y=\"" << y + 4
            << "\" font-size=\"10\" text-anchor=\"end\">" << label << "</text>\n";
    }

    double x = margin_left + group_gap / 2;
    for (const auto& cell : grid.cells) {
        const auto& sc = cell.config.scenario;
        out << "<g class=\"cell\">\n";
        double bar_x = x;
        std::size_t color = 0;
        for (const auto& summary : cell.methods) {
            const double h = plot_height * summary.mean_true_positives / max_tp;
            out << "  <rect x=\"" << bar_x << "\" y=\"" << margin_top + plot_height - h
                << "\" width=\"" << bar_width << "\" height=\"" << h << "\" fill=\""
                << palette[color % 6] << "\"/>\n";
            bar_x += bar_width + bar_gap;
            ++color;
        }
        char label[64];
        std::snprintf(label, sizeof(label), "m=%zu rho=%.3g", sc.m, sc.rho);
        out << "  <text x=\"" << x + group_width / 2 << "\" y=\""
            << margin_top + plot_height + 18 << "\" font-size=\"10\" text-anchor=\"middle\">"
            << label << "</text>\n";
        out << "</g>\n";
        x += group_width + group_gap;
    }

    // legend
    if (!grid.cells.empty()) {
        double ly = margin_top + plot_height + 34;
        double lx = margin_left;
        std::size_t color = 0;
        for (const auto& summary : grid.cells.front().methods) {
            out << "<rect x=\"" << lx << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
                << palette[color % 6] << "\"/>\n";
            out << "<text x=\"" << lx + 14 << "\" y=\"" << ly << "\" font-size=\"10\">"
                << method_name(summary.method) << "</text>\n";
            lx += 140;
            ++color;
        }
    }
    out << "</svg>\n";
}

BenchmarkReport run_benchmark(std::size_t m, std::size_t permutations, std::uint64_t seed,
                              unsigned threads, std::size_t n) {
    if (m < 2 || permutations < 1 || n < 4 || n % 2 != 0) {
        throw input_error("benchmark needs m >= 2, permutations >= 1, even n >= 4");
    }
    BenchmarkReport report;
    report.m = m;
    report.half_m = m / 2;
    report.n = n;
    report.permutations = permutations;
    report.seed = seed;
    report.threads = threads;
    report.cpu = cpu_model();

    // The exact null table is memoized process-wide; build it up front so
    // both timed runs measure the sweep itself.
    rank_sum_null(n / 2, n / 2);

    auto run_once = [&](std::size_t m_now, bool record_phases) {
        SimulationScenario scenario;
        scenario.m = m_now;
        scenario.n1 = n / 2;
        scenario.n2 = n / 2;
        scenario.structure = CovarianceStructure::block;
        scenario.rho = 0.9;
        scenario.block_size = 50;
        scenario.seed = seed;

        auto t0 = std::chrono::steady_clock::now();
        const auto dataset = generate_dataset(scenario, 0);
        const double generate_s = seconds_since(t0);

        PermutationPlan plan;
        plan.mode = PermutationMode::sampled;
        plan.count = permutations;
        plan.seed = derive_seed(seed, kPlanTag);

        t0 = std::chrono::steady_clock::now();
        MarginalTest test;   // exact rank-sum marginals
        const auto source = make_sweep_source(dataset.data, test, plan);
        const double prepare_s = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        const auto sweep = sweep_minp(*source, threads);
        const double threshold =
            wy_threshold(sweep.minp, threshold_candidates(*source, sweep), 0.05);
        const double sweep_s = seconds_since(t0);

        if (record_phases) {
            report.generate_seconds = generate_s;
            report.prepare_seconds = prepare_s;
            report.sweep_seconds = sweep_s;
            report.threshold = threshold;
        }
        return generate_s + prepare_s + sweep_s;
    };

    report.half_m_total_seconds = run_once(report.half_m, false);
    report.total_seconds = run_once(m, true);
    report.per_hypothesis_ms = 1000.0 * report.total_seconds / static_cast<double>(m);
    report.scaling_ratio = report.half_m_total_seconds > 0.0
                               ? report.total_seconds / report.half_m_total_seconds
                               : 0.0;
    return report;
}

std::string benchmark_json(const BenchmarkReport& report) {
    nlohmann::json j;
    j["m"] = report.m;
    j["half_m"] = report.half_m;
    j["n"] = report.n;
    j["permutations"] = report.permutations;
    j["seed"] = report.seed;
    j["threads"] = report.threads;
    j["cpu"] = report.cpu;
    j["generate_seconds"] = report.generate_seconds;
    j["prepare_seconds"] = report.prepare_seconds;
    j["sweep_seconds"] = report.sweep_seconds;
    j["total_seconds"] = report.total_seconds;
    j["per_hypothesis_ms"] = report.per_hypothesis_ms;
    j["half_m_total_seconds"] = report.half_m_total_seconds;
    j["scaling_ratio"] = report.scaling_ratio;
    j["threshold"] = report.threshold;
    return j.dump(2);
}

} // namespace wy
