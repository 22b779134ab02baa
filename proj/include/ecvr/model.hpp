#pragma once

#include <span>
#include <string>
#include <vector>

#include "ecvr/attribution.hpp"
#include "ecvr/heads.hpp"
#include "ecvr/losses.hpp"
#include "ecvr/nn.hpp"
#include "ecvr/rng.hpp"
#include "ecvr/variants.hpp"
#include "ecvr/windows.hpp"

namespace ecvr {

// Desk-scale layer widths; the production-scale stacks this stands in for
// are an order of magnitude wider.
struct NetSizes {
  int embedding_dim = 8;
  std::vector<int> bottom_layers{32, 16};
  std::vector<int> tower_layers{16};
  double leaky_slope = 0.01;
};

struct Tower {
  HeadRole role;
  DenseStack stack;  // hidden widths from NetSizes, output width 1, linear out
};

// One shared bottom with a set of sigmoid towers and the loss term table of
// its archetype.
struct ModelBundle {
  BundleArch arch = BundleArch::CvrOnly;
  std::string role_tag = "main";
  int n = 0;
  int m = 0;
  LabelLayout layout;
  SharedBottom bottom;
  std::vector<Tower> towers;
  std::vector<HeadRole> roles;
  std::vector<LossTerm> terms;

  std::vector<ParamTensor*> params() {
    std::vector<ParamTensor*> out;
    for (auto& f : bottom.fields) out.push_back(&f.table);
    for (auto& l : bottom.stack.layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    for (auto& t : towers) {
      for (auto& l : t.stack.layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
      }
    }
    return out;
  }

  int head(HeadRole::Kind kind, int i = -1, int j = -1) const {
    return head_index(roles, kind, i, j);
  }
};

// Initialization stream is keyed by the architecture signature, not the
// variant: two variants with identical networks start from identical
// parameters and differ only through their training data.
inline std::string arch_signature(BundleArch arch, int n, int m, const NetSizes& sizes,
                                  int num_fields, int cardinality) {
  std::string sig = arch_name(arch) + "|n" + std::to_string(n) + "m" + std::to_string(m) + "|e" +
                    std::to_string(sizes.embedding_dim) + "|b";
  for (int d : sizes.bottom_layers) sig += std::to_string(d) + ",";
  sig += "|t";
  for (int d : sizes.tower_layers) sig += std::to_string(d) + ",";
  sig += "|f" + std::to_string(num_fields) + "x" + std::to_string(cardinality);
  return sig;
}

inline ModelBundle build_bundle(BundleArch arch, const std::string& role_tag, int n, int m,
                                const NetSizes& sizes, int num_fields, int cardinality,
                                std::uint64_t master_seed) {
  ModelBundle b;
  b.arch = arch;
  b.role_tag = role_tag;
  b.n = n;
  b.m = m;
  b.layout = LabelLayout(n, m);
  b.roles = head_roles(arch, n, m);
  b.terms = loss_terms(arch, b.roles, b.layout);

  Rng rng(substream_seed(master_seed, arch_signature(arch, n, m, sizes, num_fields, cardinality)));
  for (int f = 0; f < num_fields; ++f)
    b.bottom.fields.push_back(EmbeddingTable::make(f, cardinality, sizes.embedding_dim, rng));

  std::vector<int> bottom_dims{num_fields * sizes.embedding_dim};
  bottom_dims.insert(bottom_dims.end(), sizes.bottom_layers.begin(), sizes.bottom_layers.end());
  b.bottom.stack = DenseStack::make("bottom", bottom_dims, /*activate_output=*/true,
                                    sizes.leaky_slope, rng);

  const int hidden = bottom_dims.back();
  for (const HeadRole& role : b.roles) {
    std::vector<int> tower_dims{hidden};
    tower_dims.insert(tower_dims.end(), sizes.tower_layers.begin(), sizes.tower_layers.end());
    tower_dims.push_back(1);
    b.towers.push_back({role, DenseStack::make("tower." + role.tag(), tower_dims,
                                               /*activate_output=*/false, sizes.leaky_slope,
                                               rng)});
  }
  return b;
}

// Reusable per-sample forward/backward scratch.
struct BundleState {
  std::vector<double> concat;
  StackCache bottom;
  std::vector<StackCache> towers;
  std::vector<double> head_p;
  std::vector<double> d_head_p;
  std::vector<double> d_hidden;
  std::vector<double> d_tower_in;
  std::vector<double> d_concat;
};

inline void bundle_forward(const ModelBundle& b, std::span<const Feature> features,
                           BundleState& st) {
  const auto hidden = forward_bottom(b.bottom, features, st.concat, st.bottom);
  st.towers.resize(b.towers.size());
  st.head_p.resize(b.towers.size());
  for (std::size_t k = 0; k < b.towers.size(); ++k)
    st.head_p[k] = forward_tower(b.towers[k].stack, hidden, st.towers[k]);
}

inline double bundle_loss(const ModelBundle& b, const LabeledSample& sample,
                          const BundleState& st) {
  return masked_loss(b.terms, st.head_p, sample);
}

// Forward must have been run on `st` for this sample. Accumulates gradients
// of the masked loss into every parameter tensor and returns the loss.
inline double bundle_backward(ModelBundle& b, const LabeledSample& sample, BundleState& st) {
  st.d_head_p.assign(st.head_p.size(), 0.0);
  const double loss =
      masked_loss_backward(b.terms, st.head_p, sample, st.d_head_p);

  const int hidden_dim = b.bottom.stack.out_dim();
  st.d_hidden.assign(static_cast<std::size_t>(hidden_dim), 0.0);
  for (std::size_t k = 0; k < b.towers.size(); ++k) {
    if (st.d_head_p[k] == 0.0) continue;
    const double p = st.head_p[k];
    const double d_logit = st.d_head_p[k] * p * (1.0 - p);  // sigmoid backward
    const double d_out[1] = {d_logit};
    dense_backward(b.towers[k].stack, st.towers[k], d_out, st.d_tower_in);
    for (int i = 0; i < hidden_dim; ++i) st.d_hidden[i] += st.d_tower_in[i];
  }
  backward_bottom(b.bottom, sample.event.features, st.bottom, st.d_hidden, st.d_concat);
  return loss;
}

inline HeadProbs bundle_heads(const ModelBundle& b, const BundleState& st) {
  using K = HeadRole::Kind;
  HeadProbs h;
  h.a.resize(b.n);
  h.s.resize(b.m);
  if (b.arch == BundleArch::EcadLite || b.arch == BundleArch::Ecad) h.u.resize(b.n);
  if (b.arch == BundleArch::Ecad) h.t.resize(static_cast<std::size_t>(b.n) * b.m);
  for (std::size_t k = 0; k < b.roles.size(); ++k) {
    const HeadRole& role = b.roles[k];
    const double p = st.head_p[k];
    switch (role.kind) {
      case K::ConvWithin: h.a[role.i] = p; break;
      case K::Cvr: h.q_y = p; break;
      case K::RefundWithin: h.s[role.j] = p; break;
      case K::Rfr: h.r = p; break;
      case K::ConvWithinRefunded: h.u[role.i] = p; break;
      case K::CrossWithin: h.t[role.i * b.m + role.j] = p; break;
      case K::Effective: h.eff = p; break;
    }
  }
  if (b.arch == BundleArch::EcadLite) {
    h.t.resize(static_cast<std::size_t>(b.n) * b.m);
    for (int i = 0; i < b.n; ++i)
      for (int j = 0; j < b.m; ++j) h.t[i * b.m + j] = combine_lite_cross(h.u[i], h.s[j]);
  }
  return h;
}

// A trained model: the variant plus one bundle ("main") or the cvr/rfr pair
// for independent-modeling variants.
struct TrainedModel {
  ModelVariant variant = ModelVariant::CvrBase;
  WindowConfig windows;
  NetSizes sizes;
  int num_fields = 0;
  int cardinality = 0;
  std::vector<ModelBundle> bundles;

  ModelBundle& bundle(const std::string& tag) {
    for (auto& b : bundles)
      if (b.role_tag == tag) return b;
    throw ConfigError("model has no bundle '" + tag + "'");
  }
  const ModelBundle& bundle(const std::string& tag) const {
    return const_cast<TrainedModel*>(this)->bundle(tag);
  }
};

inline TrainedModel build_model(ModelVariant v, const WindowConfig& wc, const NetSizes& sizes,
                                int num_fields, int cardinality, std::uint64_t master_seed) {
  wc.validate();
  TrainedModel model;
  model.variant = v;
  model.windows = wc;
  model.sizes = sizes;
  model.num_fields = num_fields;
  model.cardinality = cardinality;
  for (const BundleSpec& spec : bundles_for(v)) {
    model.bundles.push_back(build_bundle(spec.arch, spec.role_tag, wc.n(), wc.m(), sizes,
                                         num_fields, cardinality, master_seed));
  }
  return model;
}

namespace detail {

inline double head_prob(const ModelBundle& b, std::span<const Feature> features,
                        HeadRole::Kind kind, BundleState& st) {
  bundle_forward(b, features, st);
  return st.head_p[b.head(kind)];
}

}  // namespace detail

// Scores one sample for a task. CVR -> q_y, RFR -> r, ECVR -> q_y * (1 - r)
// (or the dedicated head for the single-tower baseline).
inline double predict(const TrainedModel& model, std::span<const Feature> features, Task task,
                      BundleState& st) {
  using K = HeadRole::Kind;
  if (!supports_task(model.variant, task))
    throw UnsupportedTaskError("variant " + variant_name(model.variant) +
                               " does not support task " + task_name(task));
  switch (model.variant) {
    case ModelVariant::CvrBase:
      return detail::head_prob(model.bundles[0], features, K::Cvr, st);
    case ModelVariant::RfrBase:
      return detail::head_prob(model.bundles[0], features, K::Rfr, st);
    case ModelVariant::EcvrBase:
      return detail::head_prob(model.bundles[0], features, K::Effective, st);
    case ModelVariant::Im:
    case ModelVariant::ImDefer: {
      if (task == Task::Cvr)
        return detail::head_prob(model.bundle("cvr"), features, K::Cvr, st);
      if (task == Task::Rfr)
        return detail::head_prob(model.bundle("rfr"), features, K::Rfr, st);
      const double q = detail::head_prob(model.bundle("cvr"), features, K::Cvr, st);
      const double r = detail::head_prob(model.bundle("rfr"), features, K::Rfr, st);
      return combine_ecvr(q, r);
    }
    default: {
      const ModelBundle& b = model.bundles[0];
      bundle_forward(b, features, st);
      const double q = st.head_p[b.head(K::Cvr)];
      const double r = st.head_p[b.head(K::Rfr)];
      if (task == Task::Cvr) return q;
      if (task == Task::Rfr) return r;
      return combine_ecvr(q, r);
    }
  }
}

inline double predict(const TrainedModel& model, std::span<const Feature> features, Task task) {
  BundleState st;
  return predict(model, features, task, st);
}

}  // namespace ecvr
