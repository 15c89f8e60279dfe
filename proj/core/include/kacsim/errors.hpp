#pragma once

#include <stdexcept>
#include <string>

namespace kacsim {

// Unreachable tolerance, non-convergent iteration, invalid state detected mid-run.
// The CLI maps this to exit code 1.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: malformed config, unknown key, out-of-domain parameter.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kacsim
