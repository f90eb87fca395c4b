#include "wy/partition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wy/errors.hpp"

namespace wy {

void HypothesisPartition::validate() const {
    std::vector<char> seen(m, 0);
    auto mark = [&](const std::vector<std::uint32_t>& indices) {
        for (auto j : indices) {
            if (j >= m) throw input_error("hypothesis index " + std::to_string(j) + " out of range");
            if (seen[j]) throw input_error("hypothesis index " + std::to_string(j) + " listed twice");
            seen[j] = 1;
        }
    };
    mark(true_nulls);
    mark(alternatives);
    if (true_nulls.size() + alternatives.size() != m) {
        throw input_error("true nulls and alternatives must partition the hypothesis set");
    }
    if (blocks.empty()) return;

    std::vector<char> in_block(m, 0);
    std::vector<char> is_null(m, 0);
    for (auto j : true_nulls) is_null[j] = 1;
    for (const auto& block : blocks) {
        bool touches_null = false;
        for (auto j : block) {
            if (j >= m) throw input_error("block index out of range");
            if (in_block[j]) throw input_error("blocks overlap at index " + std::to_string(j));
            in_block[j] = 1;
            touches_null = touches_null || is_null[j];
        }
        if (!touches_null) throw input_error("every block must contain at least one true null");
    }
    if (std::count(in_block.begin(), in_block.end(), 1) != static_cast<std::ptrdiff_t>(m)) {
        throw input_error("blocks must cover all hypotheses");
    }
}

std::size_t HypothesisPartition::max_block_size() const {
    std::size_t best = 0;
    for (const auto& block : blocks) best = std::max(best, block.size());
    return best;
}

double HypothesisPartition::sparsity_ratio() const {
    if (blocks.empty()) return 0.0;
    return static_cast<double>(alternatives.size()) / static_cast<double>(blocks.size());
}

double HypothesisPartition::block_size_ratio() const {
    if (blocks.empty()) return 0.0;
    return static_cast<double>(max_block_size()) / std::sqrt(static_cast<double>(blocks.size()));
}

HypothesisPartition make_partition(std::size_t m, std::vector<std::uint32_t> alternatives,
                                   std::vector<std::vector<std::uint32_t>> blocks) {
    HypothesisPartition partition;
    partition.m = m;
    std::sort(alternatives.begin(), alternatives.end());
    partition.alternatives = std::move(alternatives);
    std::vector<char> is_alt(m, 0);
    for (auto j : partition.alternatives) {
        if (j >= m) throw input_error("alternative index out of range");
        is_alt[j] = 1;
    }
    partition.true_nulls.reserve(m - partition.alternatives.size());
    for (std::uint32_t j = 0; j < m; ++j) {
        if (!is_alt[j]) partition.true_nulls.push_back(j);
    }
    partition.blocks = std::move(blocks);
    partition.validate();
    return partition;
}

} // namespace wy
