#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snpmix {

// Malformed input: bad files, dimension mismatches, empty panels.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parse failure with the offending line attached.
class ParseError : public DataError {
public:
    ParseError(const std::string& msg, std::size_t line)
        : DataError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Numerical failure: non-convergence, non-finite intermediate values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadrature ran out of refinement levels; carries the last estimate.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& msg, double last_estimate)
        : NumericalError(msg), last_estimate_(last_estimate) {}

    double last_estimate() const noexcept { return last_estimate_; }

private:
    double last_estimate_;
};

}  // namespace snpmix
