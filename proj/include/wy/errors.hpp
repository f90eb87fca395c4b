#pragma once

#include <stdexcept>
#include <string>

namespace wy {

// Bad user input: malformed files, out-of-range options, schema violations.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Statistical precondition violated: ties under a strict policy, degenerate
// group sizes, enumeration budgets exceeded.
class precondition_error : public std::runtime_error {
public:
    explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace wy
