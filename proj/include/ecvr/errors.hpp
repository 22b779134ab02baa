#pragma once

#include <stdexcept>

namespace ecvr {

// Bad configuration: inconsistent dims, unknown keys, invalid windows.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed files, out-of-range feature indices.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Metric undefined on its input (single-class AUC, oracle == base RI).
struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Asked a model for a task its variant does not support.
struct UnsupportedTaskError : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace ecvr
