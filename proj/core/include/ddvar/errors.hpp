#pragma once

#include <stdexcept>
#include <string>

namespace ddvar {

// Invalid or inconsistent user-facing configuration (bad sizes, divisibility,
// unknown keys). Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Shape mismatch between fields and the grid or decomposition they are used with.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Breakdown of a numerical procedure (CFL violation, non-SPD system, stalled
// line search). Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Missing data in the exchange protocol between subdomains.
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Time step rejected by the stability check; carries the computed bound.
struct CflError : NumericalError {
    CflError(const std::string& what, double number, double limit, int step)
        : NumericalError(what), cfl_number(number), cfl_limit(limit), step_index(step) {}
    double cfl_number;
    double cfl_limit;
    int step_index;  // failing step in a propagation, -1 for a single step
};

}  // namespace ddvar
