#pragma once

#include <cstddef>
#include <vector>

#include "wy/fraction.hpp"

namespace wy {

// Number of integer partitions of j whose part count and part magnitudes
// are both bounded by n. partition_count(n, 0) == 1 for all n.
BigInt partition_count(std::size_t n, std::size_t j);

// partition_count(n, j) for j = 0..j_max in one table.
std::vector<BigInt> partition_count_table(std::size_t n, std::size_t j_max);

} // namespace wy
