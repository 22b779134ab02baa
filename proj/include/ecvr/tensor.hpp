#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ecvr/errors.hpp"

namespace ecvr {

// A named trainable tensor. `grad` always has the same length as `values`
// and accumulates until the optimizer consumes and zeroes it.
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;

  ParamTensor() = default;

  ParamTensor(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    std::size_t count = 1;
    for (int d : shape) {
      if (d <= 0) throw ConfigError("ParamTensor '" + name + "': non-positive dimension");
      count *= static_cast<std::size_t>(d);
    }
    values.assign(count, 0.0);
    grad.assign(count, 0.0);
  }

  std::size_t size() const { return values.size(); }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

}  // namespace ecvr
