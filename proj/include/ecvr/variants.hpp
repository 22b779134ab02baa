#pragma once

#include <string>
#include <vector>

#include "ecvr/attribution.hpp"
#include "ecvr/errors.hpp"
#include "ecvr/windows.hpp"

namespace ecvr {

enum class ModelVariant {
  CvrBase,
  RfrBase,
  EcvrBase,
  Im,
  ImDefer,
  Esmm,
  EcadDe,
  EcadLite,
  Ecad,
  EsmmOracle,
};

inline const std::vector<ModelVariant>& all_variants() {
  static const std::vector<ModelVariant> v{
      ModelVariant::CvrBase,  ModelVariant::RfrBase,  ModelVariant::EcvrBase,
      ModelVariant::Im,       ModelVariant::ImDefer,  ModelVariant::Esmm,
      ModelVariant::EcadDe,   ModelVariant::EcadLite, ModelVariant::Ecad,
      ModelVariant::EsmmOracle};
  return v;
}

inline std::string variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::CvrBase: return "cvr_base";
    case ModelVariant::RfrBase: return "rfr_base";
    case ModelVariant::EcvrBase: return "ecvr_base";
    case ModelVariant::Im: return "im";
    case ModelVariant::ImDefer: return "im_defer";
    case ModelVariant::Esmm: return "esmm";
    case ModelVariant::EcadDe: return "ecad_de";
    case ModelVariant::EcadLite: return "ecad_lite";
    case ModelVariant::Ecad: return "ecad";
    case ModelVariant::EsmmOracle: return "esmm_oracle";
  }
  throw ConfigError("unknown variant");
}

inline ModelVariant parse_variant(const std::string& name) {
  for (ModelVariant v : all_variants())
    if (variant_name(v) == name) return v;
  throw ConfigError("unknown variant '" + name + "'");
}

enum class Task { Cvr, Rfr, Ecvr };

inline const std::vector<Task>& all_tasks() {
  static const std::vector<Task> t{Task::Cvr, Task::Rfr, Task::Ecvr};
  return t;
}

inline std::string task_name(Task t) {
  switch (t) {
    case Task::Cvr: return "cvr";
    case Task::Rfr: return "rfr";
    case Task::Ecvr: return "ecvr";
  }
  throw ConfigError("unknown task");
}

inline bool supports_task(ModelVariant v, Task t) {
  switch (v) {
    case ModelVariant::CvrBase: return t == Task::Cvr;
    case ModelVariant::RfrBase: return t == Task::Rfr;
    case ModelVariant::EcvrBase: return t == Task::Ecvr;
    default: return true;
  }
}

// Conditional probabilities a tower can predict. i indexes conversion
// windows W_i, j refund windows V_j.
struct HeadRole {
  enum class Kind {
    ConvWithin,          // a_i = p(w < W_i | y=1, x)
    Cvr,                 // q_y = p(y=1 | x)
    RefundWithin,        // s_j = p(v < V_j | z=1, y=1, x)
    Rfr,                 // r = p(z=1 | y=1, x)
    ConvWithinRefunded,  // u_i = p(w < W_i | z=1, y=1, x)
    CrossWithin,         // t_ij = p(v < V_j, w < W_i | z=1, y=1, x)
    Effective,           // p(y=1, z=0 | x), single-tower baseline only
  };

  Kind kind = Kind::Cvr;
  int i = -1;
  int j = -1;

  std::string tag() const {
    switch (kind) {
      case Kind::ConvWithin: return "a" + std::to_string(i);
      case Kind::Cvr: return "qy";
      case Kind::RefundWithin: return "s" + std::to_string(j);
      case Kind::Rfr: return "r";
      case Kind::ConvWithinRefunded: return "u" + std::to_string(i);
      case Kind::CrossWithin: return "t" + std::to_string(i) + "x" + std::to_string(j);
      case Kind::Effective: return "eff";
    }
    throw ConfigError("unknown head role");
  }

  friend bool operator==(const HeadRole&, const HeadRole&) = default;
};

// A single trained network (shared bottom + towers). Composite variants
// (IM, IM-Defer) pair a Cvr-side and an Rfr-side bundle.
enum class BundleArch {
  CvrOnly,
  RfrOnly,
  EcvrOnly,
  Esmm,
  DeferCvr,
  DeferRfr,
  EcadDe,
  EcadLite,
  Ecad,
};

inline std::string arch_name(BundleArch a) {
  switch (a) {
    case BundleArch::CvrOnly: return "cvr_only";
    case BundleArch::RfrOnly: return "rfr_only";
    case BundleArch::EcvrOnly: return "ecvr_only";
    case BundleArch::Esmm: return "esmm";
    case BundleArch::DeferCvr: return "defer_cvr";
    case BundleArch::DeferRfr: return "defer_rfr";
    case BundleArch::EcadDe: return "ecad_de";
    case BundleArch::EcadLite: return "ecad_lite";
    case BundleArch::Ecad: return "ecad";
  }
  throw ConfigError("unknown bundle arch");
}

// Tower order mirrors the loss term order: a_1..a_n, qy, s_1..s_m, r, then
// u_1..u_n and the t_ij grid for the full cross model.
inline std::vector<HeadRole> head_roles(BundleArch arch, int n, int m) {
  using K = HeadRole::Kind;
  std::vector<HeadRole> roles;
  auto conv_steps = [&] {
    for (int i = 0; i < n; ++i) roles.push_back({K::ConvWithin, i, -1});
  };
  auto refund_steps = [&] {
    for (int j = 0; j < m; ++j) roles.push_back({K::RefundWithin, -1, j});
  };
  switch (arch) {
    case BundleArch::CvrOnly:
      roles.push_back({K::Cvr});
      break;
    case BundleArch::RfrOnly:
      roles.push_back({K::Rfr});
      break;
    case BundleArch::EcvrOnly:
      roles.push_back({K::Effective});
      break;
    case BundleArch::Esmm:
      roles.push_back({K::Cvr});
      roles.push_back({K::Rfr});
      break;
    case BundleArch::DeferCvr:
      conv_steps();
      roles.push_back({K::Cvr});
      break;
    case BundleArch::DeferRfr:
      refund_steps();
      roles.push_back({K::Rfr});
      break;
    case BundleArch::EcadDe:
      conv_steps();
      roles.push_back({K::Cvr});
      refund_steps();
      roles.push_back({K::Rfr});
      break;
    case BundleArch::EcadLite:
      conv_steps();
      roles.push_back({K::Cvr});
      refund_steps();
      roles.push_back({K::Rfr});
      for (int i = 0; i < n; ++i) roles.push_back({K::ConvWithinRefunded, i, -1});
      break;
    case BundleArch::Ecad:
      conv_steps();
      roles.push_back({K::Cvr});
      refund_steps();
      roles.push_back({K::Rfr});
      for (int i = 0; i < n; ++i) roles.push_back({K::ConvWithinRefunded, i, -1});
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) roles.push_back({K::CrossWithin, i, j});
      break;
  }
  return roles;
}

inline int head_index(const std::vector<HeadRole>& roles, HeadRole::Kind kind, int i = -1,
                      int j = -1) {
  for (std::size_t k = 0; k < roles.size(); ++k) {
    if (roles[k].kind == kind && roles[k].i == i && roles[k].j == j) return static_cast<int>(k);
  }
  throw ConfigError("bundle has no such head");
}

// One masked binary cross-entropy term: bce(product of factor heads, label).
// Joint probabilities are always formed as products of conditional heads, so
// each term is fully described by the factor set and the label slot.
struct LossTerm {
  std::vector<int> factors;  // tower indices within the bundle
  int slot = 0;
};

inline std::vector<LossTerm> loss_terms(BundleArch arch, const std::vector<HeadRole>& roles,
                                        const LabelLayout& layout) {
  using K = HeadRole::Kind;
  const int n = layout.n;
  const int m = layout.m;
  std::vector<LossTerm> terms;
  auto idx = [&](K k, int i = -1, int j = -1) { return head_index(roles, k, i, j); };

  switch (arch) {
    case BundleArch::CvrOnly:
      terms.push_back({{idx(K::Cvr)}, layout.slot_y()});
      break;
    case BundleArch::RfrOnly:
      terms.push_back({{idx(K::Rfr)}, layout.slot_z()});
      break;
    case BundleArch::EcvrOnly:
      terms.push_back({{idx(K::Effective)}, layout.slot_effective()});
      break;
    case BundleArch::Esmm:
      terms.push_back({{idx(K::Cvr)}, layout.slot_y()});
      terms.push_back({{idx(K::Cvr), idx(K::Rfr)}, layout.slot_yz()});
      break;
    case BundleArch::DeferCvr:
      for (int i = 0; i < n; ++i)
        terms.push_back({{idx(K::Cvr), idx(K::ConvWithin, i)}, layout.slot_yw(i)});
      terms.push_back({{idx(K::Cvr)}, layout.slot_y()});
      break;
    case BundleArch::DeferRfr:
      // mirrored onto the refund cascade: joints are conditional on the
      // conversion, trained on converted samples only
      for (int j = 0; j < m; ++j)
        terms.push_back({{idx(K::Rfr), idx(K::RefundWithin, -1, j)}, layout.slot_zw(j)});
      terms.push_back({{idx(K::Rfr)}, layout.slot_z()});
      break;
    case BundleArch::EcadDe:
    case BundleArch::EcadLite:
    case BundleArch::Ecad: {
      for (int i = 0; i < n; ++i)
        terms.push_back({{idx(K::Cvr), idx(K::ConvWithin, i)}, layout.slot_yw(i)});
      terms.push_back({{idx(K::Cvr)}, layout.slot_y()});
      for (int j = 0; j < m; ++j)
        terms.push_back(
            {{idx(K::Cvr), idx(K::Rfr), idx(K::RefundWithin, -1, j)}, layout.slot_y_zw(j)});
      if (arch != BundleArch::EcadDe) {
        for (int i = 0; i < n; ++i)
          terms.push_back(
              {{idx(K::Cvr), idx(K::Rfr), idx(K::ConvWithinRefunded, i)}, layout.slot_yw_z(i)});
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < m; ++j) {
            if (arch == BundleArch::Ecad) {
              terms.push_back({{idx(K::Cvr), idx(K::Rfr), idx(K::CrossWithin, i, j)},
                               layout.slot_yw_zw(i, j)});
            } else {
              // t_ij factored as u_i * s_j: conversion and refund time are
              // treated as independent given a refunded conversion
              terms.push_back({{idx(K::Cvr), idx(K::Rfr), idx(K::ConvWithinRefunded, i),
                                idx(K::RefundWithin, -1, j)},
                               layout.slot_yw_zw(i, j)});
            }
          }
        }
      }
      terms.push_back({{idx(K::Cvr), idx(K::Rfr)}, layout.slot_yz()});
      break;
    }
  }
  return terms;
}

struct BundleSpec {
  BundleArch arch;
  std::string role_tag;  // "main", or "cvr"/"rfr" for composite variants
};

inline std::vector<BundleSpec> bundles_for(ModelVariant v) {
  switch (v) {
    case ModelVariant::CvrBase: return {{BundleArch::CvrOnly, "main"}};
    case ModelVariant::RfrBase: return {{BundleArch::RfrOnly, "main"}};
    case ModelVariant::EcvrBase: return {{BundleArch::EcvrOnly, "main"}};
    case ModelVariant::Im:
      return {{BundleArch::CvrOnly, "cvr"}, {BundleArch::RfrOnly, "rfr"}};
    case ModelVariant::ImDefer:
      return {{BundleArch::DeferCvr, "cvr"}, {BundleArch::DeferRfr, "rfr"}};
    case ModelVariant::Esmm:
    case ModelVariant::EsmmOracle: return {{BundleArch::Esmm, "main"}};
    case ModelVariant::EcadDe: return {{BundleArch::EcadDe, "main"}};
    case ModelVariant::EcadLite: return {{BundleArch::EcadLite, "main"}};
    case ModelVariant::Ecad: return {{BundleArch::Ecad, "main"}};
  }
  throw ConfigError("unknown variant");
}

// Training-set membership for one bundle of a variant, at a cutoff.
//
// Base models only take samples whose required label is closed by window
// elapse, never by early observation — otherwise fast positives from recent
// days would be oversampled. Defer/entire-space variants take every clicked
// sample and rely on the masks.
inline bool eligible_for_bundle(const LabeledSample& s, BundleArch arch, const WindowConfig& wc,
                                double cutoff) {
  const LabelLayout layout(wc.n(), wc.m());
  const ClickEvent& e = s.event;
  switch (arch) {
    case BundleArch::CvrOnly:
      return wc.conversion.deadline(e.click_time) <= cutoff;
    case BundleArch::RfrOnly:
      return s.determined(layout.slot_y()) && s.value(layout.slot_y()) &&
             wc.refund.deadline(e.conversion_time()) <= cutoff;
    case BundleArch::EcvrOnly:
    case BundleArch::Esmm:
      return wc.cascade_deadline(e.click_time) <= cutoff;
    case BundleArch::DeferCvr:
      return true;
    case BundleArch::DeferRfr:
      // converted-sample space: conversion observed by the cutoff
      return s.determined(layout.slot_y()) && s.value(layout.slot_y());
    case BundleArch::EcadDe:
    case BundleArch::EcadLite:
    case BundleArch::Ecad:
      return true;
  }
  throw ConfigError("unknown bundle arch");
}

// Variant-level view: a sample is eligible if any of the variant's bundles
// trains on it. The oracle sees every clicked sample (its labels come from a
// cutoff = +inf attribution).
inline bool eligible_for_variant(const LabeledSample& s, ModelVariant v, const WindowConfig& wc,
                                 double cutoff) {
  if (v == ModelVariant::EsmmOracle) return true;
  for (const BundleSpec& b : bundles_for(v)) {
    if (eligible_for_bundle(s, b.arch, wc, cutoff)) return true;
  }
  return false;
}

}  // namespace ecvr
