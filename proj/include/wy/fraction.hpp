#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace wy {

using BigInt = boost::multiprecision::cpp_int;

// Exact nonnegative rational with explicit denominator. P-values for a fixed
// test and sample size share one denominator, so comparisons stay in the
// integers until the final conversion to double.
struct Fraction {
    BigInt num = 0;
    BigInt den = 1;

    double value() const { return num.convert_to<double>() / den.convert_to<double>(); }

    Fraction normalized() const {
        BigInt g = boost::multiprecision::gcd(num, den);
        if (g == 0) return {0, 1};
        return {num / g, den / g};
    }

    friend bool operator==(const Fraction& a, const Fraction& b) {
        return a.num * b.den == b.num * a.den;
    }
    friend bool operator<(const Fraction& a, const Fraction& b) {
        return a.num * b.den < b.num * a.den;
    }
    friend bool operator<=(const Fraction& a, const Fraction& b) {
        return a.num * b.den <= b.num * a.den;
    }
};

} // namespace wy
