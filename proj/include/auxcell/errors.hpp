#pragma once

#include <stdexcept>
#include <string>

namespace auxcell {

// Bad job configuration / preconditions on user input. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// det F <= 0 at a quadrature point; signals the load stepper to cut.
struct NonPhysicalState : std::runtime_error {
  explicit NonPhysicalState(const std::string& msg) : std::runtime_error(msg) {}
};

// Analysis could not be completed (exhausted step cuts and c-updates,
// singular Jacobian, diverged outer loop). CLI exit code 3.
struct SolveFailure : std::runtime_error {
  explicit SolveFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Validation-type command found a violation (tile test, gradient check).
// CLI exit code 4.
struct ValidationFailure : std::runtime_error {
  explicit ValidationFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace auxcell
