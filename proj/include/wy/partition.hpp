#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wy {

// Ground-truth split of {0,...,m-1} into true nulls and alternatives, with
// an optional block partition. Blocks, when present, must each contain at
// least one true null.
struct HypothesisPartition {
    std::size_t m = 0;
    std::vector<std::uint32_t> true_nulls;       // ascending
    std::vector<std::uint32_t> alternatives;     // ascending
    std::vector<std::vector<std::uint32_t>> blocks;

    void validate() const;

    std::size_t num_blocks() const { return blocks.size(); }
    std::size_t max_block_size() const;

    // |I'| / B: sparsity diagnostic, small when alternatives are rare.
    double sparsity_ratio() const;
    // m_B / sqrt(B): block-size diagnostic, small when blocks are narrow.
    double block_size_ratio() const;
};

HypothesisPartition make_partition(std::size_t m, std::vector<std::uint32_t> alternatives,
                                   std::vector<std::vector<std::uint32_t>> blocks = {});

} // namespace wy
