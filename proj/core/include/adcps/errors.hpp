#pragma once

#include <stdexcept>
#include <string>

namespace adcps {

// Invalid user-supplied configuration: bad dimensions, out-of-range
// parameters, missing files.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Structurally inconsistent data fed to an operation (length mismatches,
// malformed rows).
struct data_error : std::runtime_error {
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// An iterative numerical procedure failed to converge or produced
// non-finite values.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adcps
