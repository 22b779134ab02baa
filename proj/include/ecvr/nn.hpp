#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ecvr/errors.hpp"
#include "ecvr/rng.hpp"
#include "ecvr/tensor.hpp"

namespace ecvr {

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

// Derivative recovered from the activation value; defined as 1 at exactly 0.
// Valid because slope > 0 makes the activation sign-preserving.
inline double leaky_relu_deriv(double activated, double slope) {
  return activated < 0.0 ? slope : 1.0;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Tower outputs must stay strictly inside (0,1) even when the logit
// saturates past double rounding.
inline double sigmoid_strict(double x) {
  constexpr double kMargin = 1e-15;
  return std::clamp(sigmoid(x), kMargin, 1.0 - kMargin);
}

inline constexpr double kBceEps = 1e-7;

// Binary cross-entropy with the probability clamped to [eps, 1-eps] before
// the logarithms. `label` is 0 or 1.
inline double bce(double p, double label) {
  const double pc = std::clamp(p, kBceEps, 1.0 - kBceEps);
  return -(label * std::log(pc) + (1.0 - label) * std::log(1.0 - pc));
}

// d bce / d p; zero where the clamp saturates so forward and backward agree.
inline double bce_dp(double p, double label) {
  if (p < kBceEps || p > 1.0 - kBceEps) return 0.0;
  return (p - label) / (p * (1.0 - p));
}

struct DenseLayer {
  ParamTensor weight;  // [out, in], row-major
  ParamTensor bias;    // [out]
};

// Per-sample forward activations of one dense stack: act[0] is the input,
// act[l+1] the output of layer l (post-activation where one applies).
struct StackCache {
  std::vector<std::vector<double>> act;
};

// Fully connected stack. Hidden layers always use leaky ReLU; the output
// layer is linear unless `activate_output` is set (shared bottom does, tower
// output layers do not — they feed a sigmoid).
struct DenseStack {
  std::vector<int> dims;  // [in, hidden..., out]
  std::vector<DenseLayer> layers;
  double leaky_slope = 0.01;
  bool activate_output = false;

  static DenseStack make(const std::string& name, std::vector<int> dims, bool activate_output,
                         double leaky_slope, Rng& rng) {
    if (dims.size() < 2) throw ConfigError("DenseStack '" + name + "': needs >= 2 dims");
    DenseStack s;
    s.dims = std::move(dims);
    s.leaky_slope = leaky_slope;
    s.activate_output = activate_output;
    for (std::size_t l = 0; l + 1 < s.dims.size(); ++l) {
      const int in = s.dims[l];
      const int out = s.dims[l + 1];
      DenseLayer layer{ParamTensor(name + ".l" + std::to_string(l) + ".W", {out, in}),
                       ParamTensor(name + ".l" + std::to_string(l) + ".b", {out})};
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (double& w : layer.weight.values) w = rng.uniform(-bound, bound);
      // biases stay zero
      s.layers.push_back(std::move(layer));
    }
    return s;
  }

  int in_dim() const { return dims.front(); }
  int out_dim() const { return dims.back(); }
};

inline std::span<const double> dense_forward(const DenseStack& s, std::span<const double> in,
                                             StackCache& cache) {
  if (static_cast<int>(in.size()) != s.in_dim())
    throw ConfigError("dense_forward: input width " + std::to_string(in.size()) +
                      " != " + std::to_string(s.in_dim()));
  cache.act.resize(s.layers.size() + 1);
  cache.act[0].assign(in.begin(), in.end());
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    const DenseLayer& layer = s.layers[l];
    const int out = s.dims[l + 1];
    const int width = s.dims[l];
    const std::vector<double>& x = cache.act[l];
    std::vector<double>& y = cache.act[l + 1];
    y.assign(static_cast<std::size_t>(out), 0.0);
    const bool activate = (l + 1 < s.layers.size()) || s.activate_output;
    for (int o = 0; o < out; ++o) {
      const double* wrow = layer.weight.values.data() + static_cast<std::size_t>(o) * width;
      double z = layer.bias.values[o];
      for (int i = 0; i < width; ++i) z += wrow[i] * x[i];
      y[o] = activate ? leaky_relu(z, s.leaky_slope) : z;
    }
  }
  return cache.act.back();
}

// Backpropagates d_out (dL/d output) through the stack, accumulating weight
// and bias gradients, and writes dL/d input into d_in.
inline void dense_backward(DenseStack& s, const StackCache& cache, std::span<const double> d_out,
                           std::vector<double>& d_in) {
  std::vector<double> delta(d_out.begin(), d_out.end());
  std::vector<double> next;
  for (std::size_t li = s.layers.size(); li-- > 0;) {
    DenseLayer& layer = s.layers[li];
    const int out = s.dims[li + 1];
    const int width = s.dims[li];
    const std::vector<double>& x = cache.act[li];
    const std::vector<double>& y = cache.act[li + 1];
    const bool activate = (li + 1 < s.layers.size()) || s.activate_output;
    if (activate) {
      for (int o = 0; o < out; ++o) delta[o] *= leaky_relu_deriv(y[o], s.leaky_slope);
    }
    next.assign(static_cast<std::size_t>(width), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* gw = layer.weight.grad.data() + static_cast<std::size_t>(o) * width;
      const double* wrow = layer.weight.values.data() + static_cast<std::size_t>(o) * width;
      layer.bias.grad[o] += d;
      for (int i = 0; i < width; ++i) {
        gw[i] += d * x[i];
        next[i] += d * wrow[i];
      }
    }
    delta.swap(next);
  }
  d_in = std::move(delta);
}

// One embedding table per feature field; rows initialized uniform in
// [-0.05, 0.05].
struct EmbeddingTable {
  int field_id = 0;
  int cardinality = 0;
  int dim = 0;
  ParamTensor table;

  static EmbeddingTable make(int field_id, int cardinality, int dim, Rng& rng) {
    if (cardinality <= 0 || dim <= 0) throw ConfigError("EmbeddingTable: non-positive size");
    EmbeddingTable e;
    e.field_id = field_id;
    e.cardinality = cardinality;
    e.dim = dim;
    e.table = ParamTensor("emb.f" + std::to_string(field_id), {cardinality, dim});
    for (double& v : e.table.values) v = rng.uniform(-0.05, 0.05);
    return e;
  }

  std::span<const double> row(int index) const {
    if (index < 0 || index >= cardinality)
      throw DataError("embedding lookup: index " + std::to_string(index) +
                      " out of range for field " + std::to_string(field_id));
    return {table.values.data() + static_cast<std::size_t>(index) * dim,
            static_cast<std::size_t>(dim)};
  }

  double* grad_row(int index) {
    return table.grad.data() + static_cast<std::size_t>(index) * dim;
  }
};

struct Feature {
  int field = 0;
  int index = 0;
  friend bool operator==(const Feature&, const Feature&) = default;
};

// Embeddings + dense stack shared by every tower of a bundle.
struct SharedBottom {
  std::vector<EmbeddingTable> fields;
  DenseStack stack;  // activate_output = true

  int concat_dim() const {
    int d = 0;
    for (const auto& f : fields) d += f.dim;
    return d;
  }
};

// Looks up one embedding row per field (features must list every field
// exactly once, in field order) and runs the dense stack.
inline std::span<const double> forward_bottom(const SharedBottom& bottom,
                                              std::span<const Feature> features,
                                              std::vector<double>& concat, StackCache& cache) {
  if (features.size() != bottom.fields.size())
    throw DataError("forward_bottom: expected " + std::to_string(bottom.fields.size()) +
                    " features, got " + std::to_string(features.size()));
  concat.clear();
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (features[f].field != bottom.fields[f].field_id)
      throw DataError("forward_bottom: feature field " + std::to_string(features[f].field) +
                      " at position " + std::to_string(f));
    const auto row = bottom.fields[f].row(features[f].index);
    concat.insert(concat.end(), row.begin(), row.end());
  }
  return dense_forward(bottom.stack, concat, cache);
}

// Backward counterpart: routes input-gradient slices into embedding rows.
inline void backward_bottom(SharedBottom& bottom, std::span<const Feature> features,
                            const StackCache& cache, std::span<const double> d_hidden,
                            std::vector<double>& d_concat) {
  dense_backward(bottom.stack, cache, d_hidden, d_concat);
  std::size_t off = 0;
  for (std::size_t f = 0; f < features.size(); ++f) {
    EmbeddingTable& table = bottom.fields[f];
    double* g = table.grad_row(features[f].index);
    for (int d = 0; d < table.dim; ++d) g[d] += d_concat[off + d];
    off += static_cast<std::size_t>(table.dim);
  }
}

// Runs a tower on the shared hidden vector; returns a probability strictly
// inside (0,1). The tower's final layer must have width 1.
inline double forward_tower(const DenseStack& tower, std::span<const double> hidden,
                            StackCache& cache) {
  if (tower.out_dim() != 1) throw ConfigError("forward_tower: output width must be 1");
  const auto out = dense_forward(tower, hidden, cache);
  return sigmoid_strict(out[0]);
}

}  // namespace ecvr
