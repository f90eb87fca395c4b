#include "wy/ranks.hpp"

#include <algorithm>
#include <numeric>

#include "wy/errors.hpp"

namespace wy {

namespace {

std::vector<std::uint32_t> sorted_order(std::span<const double> values) {
    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
    return order;
}

} // namespace

bool has_ties(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

std::vector<std::uint32_t> strict_ranks(std::span<const double> values) {
    const auto order = sorted_order(values);
    std::vector<std::uint32_t> ranks(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && values[order[i]] == values[order[i - 1]]) {
            throw precondition_error("tied values are not allowed under the strict tie policy");
        }
        ranks[order[i]] = static_cast<std::uint32_t>(i + 1);
    }
    return ranks;
}

std::vector<double> mid_ranks(std::span<const double> values) {
    const auto order = sorted_order(values);
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

} // namespace wy
