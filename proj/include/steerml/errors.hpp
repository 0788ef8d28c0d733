#pragma once

#include <stdexcept>
#include <string>

namespace steerml {

// Bad input: out-of-range parameters, malformed files, invariant violations.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Solver stalls and similar failures that are not the caller's fault.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace steerml
