#pragma once

#include <vector>

#include "wy/fraction.hpp"

namespace wy {

// Finite set of attainable p-values, strictly increasing, all in (0, 1],
// with maximum exactly 1.
struct PValueLattice {
    std::vector<double> values;

    bool empty() const { return values.empty(); }
    double min() const { return values.front(); }
    double max() const { return values.back(); }
};

// Lattice with exact rational values over a common denominator.
struct ExactLattice {
    std::vector<BigInt> numerators;   // strictly increasing, last == denominator
    BigInt denominator = 1;

    PValueLattice to_doubles() const {
        PValueLattice lattice;
        lattice.values.reserve(numerators.size());
        const double den = denominator.convert_to<double>();
        for (const auto& num : numerators) {
            lattice.values.push_back(num.convert_to<double>() / den);
        }
        return lattice;
    }
};

} // namespace wy
