#include "wy/sim_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "wy/errors.hpp"

namespace wy {

namespace {

constexpr std::uint64_t kDataStream = 0x5743'4441'5441ULL;   // feature draws
constexpr std::uint64_t kAltStream = 0x5743'414c'54ULL;      // alternative draws

} // namespace

void SimulationScenario::validate() const {
    if (m < 1) throw input_error("scenario needs m >= 1");
    if (n1 < 1 || n2 < 1) throw input_error("scenario needs nonempty groups");
    if (structure == CovarianceStructure::toeplitz && (rho < 0.0 || rho >= 1.0)) {
        throw input_error("toeplitz rho must lie in [0, 1)");
    }
    if (structure == CovarianceStructure::block && (rho < 0.0 || rho > 1.0)) {
        throw input_error("block rho must lie in [0, 1]");
    }
    if (structure == CovarianceStructure::block && block_size < 1) {
        throw input_error("block size must be >= 1");
    }
    if (!fixed_alternatives.empty() && num_alternatives != 0 &&
        num_alternatives != fixed_alternatives.size()) {
        throw input_error("fixed alternatives conflict with num_alternatives");
    }
    for (auto j : fixed_alternatives) {
        if (j >= m) throw input_error("alternative index out of range");
    }
    if (fixed_alternatives.empty() && num_alternatives > std::min(alternative_pool, m)) {
        throw input_error("cannot draw " + std::to_string(num_alternatives) +
                          " alternatives from a pool of " +
                          std::to_string(std::min(alternative_pool, m)));
    }
}

std::vector<double> sample_independent(std::size_t m, std::size_t n, Rng& rng) {
    std::vector<double> features(m * n);
    for (auto& v : features) v = rng.next_normal();
    return features;
}

std::vector<double> sample_toeplitz(std::size_t m, std::size_t n, double rho, Rng& rng) {
    if (rho < 0.0 || rho >= 1.0) throw input_error("toeplitz rho must lie in [0, 1)");
    if (rho == 0.0) return sample_independent(m, n, rng);
    std::vector<double> features(m * n);
    const double innovation = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        double prev = rng.next_normal();
        features[i] = prev;
        for (std::size_t j = 1; j < m; ++j) {
            prev = rho * prev + innovation * rng.next_normal();
            features[j * n + i] = prev;
        }
    }
    return features;
}

std::vector<double> sample_block(std::size_t m, std::size_t n, double rho,
                                 std::size_t block_size, Rng& rng) {
    if (rho < 0.0 || rho > 1.0) throw input_error("block rho must lie in [0, 1]");
    if (block_size < 1) throw input_error("block size must be >= 1");
    if (rho == 0.0 || block_size == 1) return sample_independent(m, n, rng);
    std::vector<double> features(m * n);
    const double factor_load = std::sqrt(rho);
    const double noise_load = std::sqrt(1.0 - rho);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t start = 0; start < m; start += block_size) {
            const double factor = rng.next_normal();
            const std::size_t stop = std::min(m, start + block_size);
            for (std::size_t j = start; j < stop; ++j) {
                features[j * n + i] = factor_load * factor + noise_load * rng.next_normal();
            }
        }
    }
    return features;
}

void apply_shift(std::vector<double>& features, std::size_t n,
                 std::span<const double> response, double group2_label,
                 std::span<const std::uint32_t> alternatives, double delta) {
    if (response.size() != n) throw input_error("response length mismatch");
    const std::size_t m = features.size() / n;
    for (auto j : alternatives) {
        if (j >= m) throw input_error("shift index out of range");
        double* row = features.data() + static_cast<std::size_t>(j) * n;
        for (std::size_t i = 0; i < n; ++i) {
            if (response[i] == group2_label) row[i] += delta;
        }
    }
}

std::vector<std::uint32_t> alternatives_for_run(const SimulationScenario& scenario,
                                                std::uint64_t run_index) {
    scenario.validate();
    if (!scenario.fixed_alternatives.empty()) {
        auto out = scenario.fixed_alternatives;
        std::sort(out.begin(), out.end());
        return out;
    }
    if (scenario.num_alternatives == 0) return {};
    const std::size_t pool = std::min(scenario.alternative_pool, scenario.m);
    const std::uint64_t key = scenario.redraw_alternatives_per_run ? run_index : 0;
    Rng rng(derive_seed(scenario.seed, kAltStream, key), 0);
    std::vector<std::uint32_t> indices(pool);
    std::iota(indices.begin(), indices.end(), 0);
    // Partial Fisher-Yates: the first num_alternatives slots are a uniform
    // without-replacement draw.
    for (std::size_t k = 0; k < scenario.num_alternatives; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.next_below(pool - k));
        std::swap(indices[k], indices[j]);
    }
    std::vector<std::uint32_t> out(indices.begin(),
                                   indices.begin() + static_cast<std::ptrdiff_t>(scenario.num_alternatives));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> null_features_for_run(const SimulationScenario& scenario,
                                          std::uint64_t run_index) {
    scenario.validate();
    Rng rng(derive_seed(scenario.seed, kDataStream, run_index), 0);
    switch (scenario.structure) {
        case CovarianceStructure::independent:
            return sample_independent(scenario.m, scenario.n(), rng);
        case CovarianceStructure::toeplitz:
            return sample_toeplitz(scenario.m, scenario.n(), scenario.rho, rng);
        case CovarianceStructure::block:
            return sample_block(scenario.m, scenario.n(), scenario.rho, scenario.block_size, rng);
    }
    throw input_error("unhandled covariance structure");
}

std::vector<std::vector<std::uint32_t>> scenario_blocks(const SimulationScenario& scenario) {
    if (scenario.structure != CovarianceStructure::block) return {};
    std::vector<std::vector<std::uint32_t>> blocks;
    for (std::size_t start = 0; start < scenario.m; start += scenario.block_size) {
        const std::size_t stop = std::min(scenario.m, start + scenario.block_size);
        std::vector<std::uint32_t> block(stop - start);
        std::iota(block.begin(), block.end(), static_cast<std::uint32_t>(start));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

GeneratedDataset generate_dataset(const SimulationScenario& scenario, std::uint64_t run_index) {
    const auto alternatives = alternatives_for_run(scenario, run_index);
    auto features = null_features_for_run(scenario, run_index);

    std::vector<double> response(scenario.n());
    std::fill(response.begin(), response.begin() + static_cast<std::ptrdiff_t>(scenario.n1), 1.0);
    std::fill(response.begin() + static_cast<std::ptrdiff_t>(scenario.n1), response.end(), 2.0);

    apply_shift(features, scenario.n(), response, 2.0, alternatives, scenario.shift);

    GeneratedDataset out;
    out.data = make_data_matrix(std::move(response), std::move(features),
                                ResponseKind::categorical);
    out.partition = make_partition(scenario.m, alternatives, scenario_blocks(scenario));
    return out;
}

namespace {

CovarianceStructure structure_from_name(const std::string& name) {
    if (name == "independent") return CovarianceStructure::independent;
    if (name == "toeplitz") return CovarianceStructure::toeplitz;
    if (name == "block") return CovarianceStructure::block;
    throw input_error("unknown covariance structure '" + name + "'");
}

const char* structure_name(CovarianceStructure s) {
    switch (s) {
        case CovarianceStructure::independent: return "independent";
        case CovarianceStructure::toeplitz: return "toeplitz";
        case CovarianceStructure::block: return "block";
    }
    return "independent";
}

} // namespace

SimulationScenario scenario_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw input_error(std::string("scenario file is not valid JSON: ") + e.what());
    }
    SimulationScenario scenario;
    try {
        scenario.m = doc.at("m").get<std::size_t>();
        scenario.n1 = doc.at("n1").get<std::size_t>();
        scenario.n2 = doc.at("n2").get<std::size_t>();
        scenario.structure = structure_from_name(doc.value("structure", std::string("independent")));
        scenario.rho = doc.value("rho", 0.0);
        scenario.block_size = doc.value("block_size", std::size_t(50));
        scenario.shift = doc.value("shift", 0.0);
        scenario.seed = doc.value("seed", std::uint64_t(0));
        if (doc.contains("alternatives")) {
            const auto& alt = doc.at("alternatives");
            if (alt.is_array()) {
                scenario.fixed_alternatives = alt.get<std::vector<std::uint32_t>>();
            } else {
                scenario.num_alternatives = alt.value("count", std::size_t(0));
                scenario.alternative_pool = alt.value("pool", std::size_t(100));
                scenario.redraw_alternatives_per_run = alt.value("redraw_per_run", true);
                if (alt.contains("indices")) {
                    scenario.fixed_alternatives = alt.at("indices").get<std::vector<std::uint32_t>>();
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("scenario schema error: ") + e.what());
    }
    scenario.validate();
    return scenario;
}

std::string scenario_to_json(const SimulationScenario& scenario) {
    nlohmann::json doc;
    doc["m"] = scenario.m;
    doc["n1"] = scenario.n1;
    doc["n2"] = scenario.n2;
    doc["structure"] = structure_name(scenario.structure);
    doc["rho"] = scenario.rho;
    if (scenario.structure == CovarianceStructure::block) doc["block_size"] = scenario.block_size;
    doc["shift"] = scenario.shift;
    doc["seed"] = scenario.seed;
    if (!scenario.fixed_alternatives.empty()) {
        doc["alternatives"] = scenario.fixed_alternatives;
    } else {
        doc["alternatives"] = {
            {"count", scenario.num_alternatives},
            {"pool", scenario.alternative_pool},
            {"redraw_per_run", scenario.redraw_alternatives_per_run},
        };
    }
    return doc.dump(2);
}

SimulationScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open scenario file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return scenario_from_json(buffer.str());
}

} // namespace wy
