#ifndef TRAPWAVE_ERRORS_HPP
#define TRAPWAVE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace trapwave {

// Error classes map onto the CLI exit codes: config/argument -> 2,
// numerical -> 3, infeasible -> 4, I/O -> 5.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Bad operation arguments (lengths, ranges, non-positive steps).
struct ArgumentError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

// Potential evaluated on a panel surface.
struct SingularityError : NumericalError {
    using NumericalError::NumericalError;
};

// Discrete minimum sits on the grid boundary; well not contained.
struct BoundaryError : NumericalError {
    using NumericalError::NumericalError;
};

// Ion left the sampled grid during dynamics.
struct EscapeError : NumericalError {
    using NumericalError::NumericalError;
};

// Fitted curvature is not confining.
struct NonConfiningError : NumericalError {
    using NumericalError::NumericalError;
};

// No alpha on the ladder satisfies the voltage bound.
struct InfeasibleError : Error {
    InfeasibleError(const std::string& what, double best_max_voltage, double best_residual)
        : Error(what), best_max_voltage(best_max_voltage), best_residual(best_residual) {}
    double best_max_voltage = 0.0;
    double best_residual = 0.0;
};

struct IoError : Error {
    using Error::Error;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int numerical = 3;
inline constexpr int infeasible = 4;
inline constexpr int io = 5;
}  // namespace exit_code

}  // namespace trapwave

#endif
