#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "wy/experiment.hpp"

using namespace wy;

namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config(std::uint64_t seed, std::size_t alternatives) {
    ExperimentConfig config;
    config.scenario.m = 30;
    config.scenario.n1 = config.scenario.n2 = 6;
    config.scenario.structure = CovarianceStructure::block;
    config.scenario.rho = 0.5;
    config.scenario.block_size = 10;
    config.scenario.num_alternatives = alternatives;
    config.scenario.alternative_pool = 30;
    config.scenario.shift = 2.5;
    config.scenario.seed = seed;
    config.alpha = 0.1;
    config.n_runs = 8;
    config.permutations = 150;
    config.oracle_sims = 150;
    config.seed = seed;
    return config;
}

fs::path temp_dir(const std::string& stem) {
    auto dir = fs::temp_directory_path() / ("wy_test_" + stem);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

nlohmann::json without_timing(const std::string& json_text) {
    auto doc = nlohmann::json::parse(json_text);
    for (auto& cell : doc["cells"]) cell.erase("timing");
    return doc;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string command = std::string(WY_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string captured;
    char buffer[512];
    while (fgets(buffer, sizeof(buffer), pipe)) captured += buffer;
    const int status = pclose(pipe);
    if (output) *output = captured;
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("complete-null experiment finds no true positives") {
    auto config = small_config(11, 0);
    const auto report = run_experiment(config);
    REQUIRE(report.methods.size() == 6);
    for (const auto& summary : report.methods) {
        CHECK(summary.mean_true_positives == 0.0);
        CHECK(summary.fwer >= 0.0);
        CHECK(summary.fwer <= 1.0);
    }
    CHECK(report.timings.total_seconds > 0.0);
}

TEST_CASE("step-down never loses to single-step, run by run") {
    auto config = small_config(12, 3);
    const auto report = run_experiment(config);
    const auto* wy_ss = report.find(AdjustmentMethod::wy_single_step);
    const auto* wy_sd = report.find(AdjustmentMethod::wy_step_down);
    const auto* bonf = report.find(AdjustmentMethod::bonferroni);
    const auto* holm = report.find(AdjustmentMethod::holm);
    REQUIRE(wy_ss);
    REQUIRE(wy_sd);
    REQUIRE(bonf);
    REQUIRE(holm);
    for (std::size_t run = 0; run < config.n_runs; ++run) {
        CHECK(wy_sd->true_positives_by_run[run] >= wy_ss->true_positives_by_run[run]);
        CHECK(holm->true_positives_by_run[run] >= bonf->true_positives_by_run[run]);
    }
}

TEST_CASE("toeplitz study: error control holds and the baseline trails") {
    ExperimentConfig config;
    config.scenario.m = 300;
    config.scenario.n1 = config.scenario.n2 = 20;
    config.scenario.structure = CovarianceStructure::toeplitz;
    config.scenario.rho = 0.95;
    config.scenario.num_alternatives = 5;
    config.scenario.alternative_pool = 100;
    config.scenario.shift = 0.9;
    config.scenario.seed = 1212;
    config.alpha = 0.05;
    config.n_runs = 50;
    config.permutations = 300;
    config.oracle_sims = 400;
    config.seed = 1212;

    const auto report = run_experiment(config);
    const auto* wy_ss = report.find(AdjustmentMethod::wy_single_step);
    const auto* bonf = report.find(AdjustmentMethod::bonferroni);
    const auto* oracle = report.find(AdjustmentMethod::oracle_single_step);
    REQUIRE(wy_ss);
    REQUIRE(bonf);
    REQUIRE(oracle);

    const double se = std::sqrt(0.05 * 0.95 / config.n_runs);
    CHECK(wy_ss->fwer <= 0.05 + 3 * se);
    CHECK(bonf->fwer <= wy_ss->fwer + 1e-12);   // the union bound is more conservative
    CHECK(wy_ss->mean_true_positives > bonf->mean_true_positives);
    CHECK(oracle->mean_true_positives >= wy_ss->mean_true_positives - 3 * 0.1);
}

TEST_CASE("reports replay byte-for-byte given the same config") {
    auto config = small_config(13, 2);
    GridReport first{{run_experiment(config)}};
    GridReport second{{run_experiment(config)}};
    CHECK(without_timing(report_json(first)) == without_timing(report_json(second)));
}

TEST_CASE("csv emission round-trips the summary numbers exactly") {
    auto config = small_config(14, 2);
    GridReport grid{{run_experiment(config)}};
    const auto dir = temp_dir("csv");
    emit_csv(grid, (dir / "experiment.csv").string());

    std::ifstream in(dir / "experiment.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "m,rho,structure,method,mean_true_positives,se_true_positives,fwer,se_fwer");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream fields(line);
        std::string m_text, rho_text, structure, method, tp, se_tp, fwer, se_fwer;
        std::getline(fields, m_text, ',');
        std::getline(fields, rho_text, ',');
        std::getline(fields, structure, ',');
        std::getline(fields, method, ',');
        std::getline(fields, tp, ',');
        std::getline(fields, se_tp, ',');
        std::getline(fields, fwer, ',');
        std::getline(fields, se_fwer, ',');

        const auto& summary = grid.cells[0].methods[rows];
        CHECK(method == method_name(summary.method));
        CHECK(std::stod(tp) == summary.mean_true_positives);
        CHECK(std::stod(se_tp) == summary.se_true_positives);
        CHECK(std::stod(fwer) == summary.fwer);
        CHECK(std::stod(se_fwer) == summary.se_fwer);
        ++rows;
    }
    CHECK(rows == grid.cells[0].methods.size());
}

TEST_CASE("svg has one group per cell and bars for every method") {
    auto config = small_config(15, 1);
    config.n_runs = 3;
    config.permutations = 80;
    config.oracle_sims = 60;
    GridReport grid;
    grid.cells.push_back(run_experiment(config));
    config.scenario.m = 40;
    grid.cells.push_back(run_experiment(config));

    const auto dir = temp_dir("svg");
    emit_svg(grid, (dir / "figure.svg").string());
    const auto svg = slurp(dir / "figure.svg");

    std::size_t groups = 0, pos = 0;
    while ((pos = svg.find("<g class=\"cell\">", pos)) != std::string::npos) {
        ++groups;
        pos += 1;
    }
    CHECK(groups == 2);

    std::size_t rects = 0;
    pos = 0;
    while ((pos = svg.find("<rect", pos)) != std::string::npos) {
        ++rects;
        pos += 1;
    }
    CHECK(rects >= 2 * grid.cells[0].methods.size());
}

TEST_CASE("empty method list still emits valid outputs") {
    auto config = small_config(16, 0);
    config.methods.clear();
    config.n_runs = 2;
    GridReport grid{{run_experiment(config)}};
    const auto dir = temp_dir("empty");
    emit_csv(grid, (dir / "e.csv").string());
    emit_json(grid, (dir / "e.json").string());
    emit_svg(grid, (dir / "e.svg").string());
    const auto csv = slurp(dir / "e.csv");
    CHECK(csv == "m,rho,structure,method,mean_true_positives,se_true_positives,fwer,se_fwer\n");
    CHECK(nlohmann::json::parse(slurp(dir / "e.json"))["cells"].size() == 1);
}

TEST_CASE("benchmark reports positive phase timings and the scaling ratio") {
    const auto report = run_benchmark(64, 40, 5, 1, 12);
    CHECK(report.generate_seconds > 0.0);
    CHECK(report.sweep_seconds > 0.0);
    CHECK(report.total_seconds >=
          report.generate_seconds + report.prepare_seconds + report.sweep_seconds - 1e-9);
    CHECK(report.per_hypothesis_ms > 0.0);
    CHECK(report.scaling_ratio > 0.0);
    const auto json = nlohmann::json::parse(benchmark_json(report));
    CHECK(json["m"] == 64);
    CHECK(json["permutations"] == 40);
}

TEST_CASE("cli: adjust produces the table, summary, and exit code 0") {
    const auto dir = temp_dir("cli_adjust");
    {
        std::ofstream data(dir / "data.csv");
        data << "1,1,1,1,2,2,2,2\n";
        data << "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8\n";          // strong separation
        data << "0.61,0.35,0.17,0.83,0.42,0.29,0.77,0.55\n";  // noise
    }
    std::string output;
    const int code = run_cli("--out " + (dir / "out").string() +
                                 " --seed 9 adjust --data " + (dir / "data.csv").string() +
                                 " --test wilcoxon --alpha 0.4 --exhaustive",
                             &output);
    CHECK(code == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(summary["hypotheses"] == 2);
    CHECK(summary["plan"]["mode"] == "exhaustive");
    CHECK(summary["plan"]["permutations"] == 70);

    const auto table = slurp(dir / "out" / "adjusted.csv");
    CHECK(table.rfind("hypothesis,raw_p,adjusted_p,rejected\n", 0) == 0);
    // perfectly separated feature attains the minimum lattice value 1/35
    CHECK(table.find("1,0.028571428571428") != std::string::npos);
}

TEST_CASE("cli: bad inputs exit 2, precondition violations exit 3") {
    const auto dir = temp_dir("cli_err");
    std::string output;
    CHECK(run_cli("adjust --data /nonexistent.csv", &output) == 2);
    CHECK(run_cli("adjust", &output) == 2);             // missing required option
    CHECK(run_cli("zebra", &output) == 2);              // unknown subcommand

    {
        std::ofstream data(dir / "tied.csv");
        data << "1,1,2,2\n";
        data << "5,5,6,7\n";   // tie under the strict policy
    }
    CHECK(run_cli("adjust --data " + (dir / "tied.csv").string() + " --test wilcoxon",
                  &output) == 3);
    CHECK(output.find("tie") != std::string::npos);
}

TEST_CASE("cli: lattice emits the exact attainable set") {
    std::string output;
    const int code = run_cli("--out /tmp/wy_test_lattice lattice --n 4", &output);
    CHECK(code == 0);
    CHECK(output.find("0,2,6,0.33333333333333331") != std::string::npos);
    CHECK(output.find("2,6,6,1") != std::string::npos);
}

TEST_CASE("cli: oracle subcommand runs a scenario file") {
    const auto dir = temp_dir("cli_oracle");
    {
        std::ofstream scenario(dir / "scenario.json");
        scenario << R"({"m":10,"n1":8,"n2":8,"structure":"independent","seed":21})";
    }
    std::string output;
    const int code = run_cli("--out " + (dir / "out").string() + " oracle --scenario " +
                                 (dir / "scenario.json").string() + " --alpha 0.1 --sims 300",
                             &output);
    CHECK(code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "out" / "oracle.json"));
    CHECK(doc["threshold"].get<double>() >= 0.0);
    CHECK(doc["effective_level"].get<double>() <= 0.1 + 3 * 0.03);
}

TEST_CASE("cli: simulate writes csv, json, and svg outputs") {
    const auto dir = temp_dir("cli_sim");
    {
        std::ofstream scenario(dir / "scenario.json");
        scenario << R"({"m":20,"n1":5,"n2":5,"structure":"block","rho":0.5,"block_size":10,
                        "alternatives":{"count":2,"pool":20},"shift":2.0,"seed":33})";
    }
    std::string output;
    const int code = run_cli("--out " + (dir / "out").string() + " simulate --scenario " +
                                 (dir / "scenario.json").string() +
                                 " --runs 3 --permutations 60 --oracle-sims 50",
                             &output);
    CHECK(code == 0);
    CHECK(fs::exists(dir / "out" / "experiment.csv"));
    CHECK(fs::exists(dir / "out" / "experiment.json"));
    CHECK(fs::exists(dir / "out" / "experiment.svg"));
    CHECK(output.find("cell m=20") != std::string::npos);
}

TEST_CASE("cli: verify passes") {
    std::string output;
    CHECK(run_cli("verify --max-n 8", &output) == 0);
    CHECK(output.find("all checks passed") != std::string::npos);
}
