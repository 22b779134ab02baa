#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ecvr/errors.hpp"
#include "ecvr/tensor.hpp"

namespace ecvr {

// Adagrad with a multiplicative decay on the squared-gradient accumulator:
//   acc   <- decay * acc + g^2
//   param <- param - lr * g / sqrt(acc + eps)
// Gradients are zeroed after each step. Accumulators start at
// initial_accumulator (not zero): a coordinate's first few updates are
// otherwise full-learning-rate sign steps, which keeps rarely-hit embedding
// rows jittering at all times instead of annealing.
struct AdagradDecay {
  double learning_rate = 0.05;
  double decay = 0.9999;
  double epsilon = 1e-8;
  double initial_accumulator = 0.1;

  std::vector<std::vector<double>> accumulators;

  void attach(std::span<ParamTensor* const> params) {
    if (decay <= 0.0 || decay > 1.0) throw ConfigError("AdagradDecay: decay must be in (0,1]");
    if (epsilon <= 0.0) throw ConfigError("AdagradDecay: epsilon must be positive");
    if (initial_accumulator < 0.0)
      throw ConfigError("AdagradDecay: initial accumulator must be >= 0");
    accumulators.clear();
    accumulators.reserve(params.size());
    for (const ParamTensor* p : params) accumulators.emplace_back(p->size(), initial_accumulator);
  }

  void step(std::span<ParamTensor* const> params) {
    if (params.size() != accumulators.size())
      throw ConfigError("AdagradDecay: step on unattached parameter set");
    for (std::size_t t = 0; t < params.size(); ++t) {
      ParamTensor& p = *params[t];
      std::vector<double>& acc = accumulators[t];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = p.grad[i];
        acc[i] = decay * acc[i] + g * g;
        p.values[i] -= learning_rate * g / std::sqrt(acc[i] + epsilon);
        p.grad[i] = 0.0;
      }
    }
  }
};

}  // namespace ecvr
