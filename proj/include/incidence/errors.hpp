#pragma once

#include <stdexcept>
#include <string>

namespace incidence {

// Bad user input: invalid parameter values, malformed configs, unknown keys.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine failed to converge or could not bracket a root.
// `diagnostics` carries the state at failure (bounds tried, residuals, ...).
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg, std::string diag = "")
        : std::runtime_error(diag.empty() ? msg : msg + " [" + diag + "]"),
          diagnostics(std::move(diag)) {}
    std::string diagnostics;
};

// Estimation-stage failure (singular design, too few clusters, no matches).
struct EstimationError : std::runtime_error {
    explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace incidence
