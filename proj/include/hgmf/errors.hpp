#pragma once

#include <stdexcept>
#include <string>

namespace hgmf {

// Bad numeric parameter passed to an operation.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Structural invariant violated by caller-supplied data.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible pieces of a configuration (orders, grids, dimensions).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number (0 = header/none).
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Work budget exceeded (enumeration or quadrature size).
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value produced by a time integrator.
struct IntegrationError : std::runtime_error {
    IntegrationError(const std::string& msg, double t)
        : std::runtime_error(msg + " at t=" + std::to_string(t)), time_(t) {}
    double time() const { return time_; }

private:
    double time_;
};

}  // namespace hgmf
