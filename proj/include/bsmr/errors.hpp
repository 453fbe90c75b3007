#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bsmr {

// Numerical failures (non-SPD matrices, divergent log densities, ...).
// CLI exit code 1.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed datasets or schemas.  CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent run configuration.  CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures.  CLI exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A sampling step failed mid-chain; carries where.
struct ChainError : NumericError {
  ChainError(std::size_t sweep_, const std::string& step_, const std::string& what_)
      : NumericError("sweep " + std::to_string(sweep_) + ", step " + step_ +
                     ": " + what_),
        sweep(sweep_),
        step(step_) {}
  std::size_t sweep;
  std::string step;
};

}  // namespace bsmr
