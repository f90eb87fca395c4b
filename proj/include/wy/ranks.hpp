#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace wy {

// Integer ranks 1..n; throws precondition_error on ties.
std::vector<std::uint32_t> strict_ranks(std::span<const double> values);

// Mid-ranks: tied values share the average of the ranks they occupy.
std::vector<double> mid_ranks(std::span<const double> values);

bool has_ties(std::span<const double> values);

} // namespace wy
