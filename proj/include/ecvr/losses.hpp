#pragma once

#include <span>
#include <vector>

#include "ecvr/attribution.hpp"
#include "ecvr/heads.hpp"
#include "ecvr/nn.hpp"
#include "ecvr/variants.hpp"

namespace ecvr {

// Sum of the determined terms: bce(product of factor heads, label). Terms
// whose label is undetermined at the cutoff are skipped entirely, so a
// masked-out label can never perturb the loss or the gradients, not even by
// a rounding bit.
inline double masked_loss(std::span<const LossTerm> terms, std::span<const double> head_p,
                          const LabeledSample& sample) {
  double total = 0.0;
  for (const LossTerm& term : terms) {
    if (!sample.determined(term.slot)) continue;
    double joint = 1.0;
    for (int f : term.factors) joint *= head_p[f];
    total += bce(joint, sample.label(term.slot));
  }
  return total;
}

// Same traversal with gradients: accumulates dLoss/d head_p into d_head_p
// (which must be pre-sized and may carry earlier contributions).
inline double masked_loss_backward(std::span<const LossTerm> terms,
                                   std::span<const double> head_p, const LabeledSample& sample,
                                   std::span<double> d_head_p) {
  double total = 0.0;
  for (const LossTerm& term : terms) {
    if (!sample.determined(term.slot)) continue;
    double joint = 1.0;
    for (int f : term.factors) joint *= head_p[f];
    const double label = sample.label(term.slot);
    total += bce(joint, label);
    const double d_joint = bce_dp(joint, label);
    if (d_joint == 0.0) continue;
    for (std::size_t k = 0; k < term.factors.size(); ++k) {
      // product of the other factors, computed directly so a saturated head
      // does not force a 0/0
      double others = 1.0;
      for (std::size_t l = 0; l < term.factors.size(); ++l)
        if (l != k) others *= head_p[term.factors[l]];
      d_head_p[term.factors[k]] += d_joint * others;
    }
  }
  return total;
}

namespace detail {

inline std::vector<double> head_vector(BundleArch arch, const HeadProbs& h) {
  using K = HeadRole::Kind;
  const auto roles = head_roles(arch, h.n(), h.m());
  std::vector<double> p(roles.size());
  for (std::size_t k = 0; k < roles.size(); ++k) {
    switch (roles[k].kind) {
      case K::ConvWithin: p[k] = h.a[roles[k].i]; break;
      case K::Cvr: p[k] = h.q_y; break;
      case K::RefundWithin: p[k] = h.s[roles[k].j]; break;
      case K::Rfr: p[k] = h.r; break;
      case K::ConvWithinRefunded: p[k] = h.u[roles[k].i]; break;
      case K::CrossWithin: p[k] = h.t[roles[k].i * h.m() + roles[k].j]; break;
      case K::Effective: p[k] = h.eff; break;
    }
  }
  return p;
}

inline double arch_loss(BundleArch arch, const HeadProbs& h, const LabeledSample& sample) {
  const LabelLayout layout(h.n(), h.m());
  const auto roles = head_roles(arch, h.n(), h.m());
  const auto terms = loss_terms(arch, roles, layout);
  return masked_loss(terms, head_vector(arch, h), sample);
}

}  // namespace detail

// Multi-window delayed-feedback loss on the conversion side:
//   sum_i bce(q_y * a_i, y_i) + bce(q_y, y), determined terms only.
inline double loss_defer(const HeadProbs& h, const LabeledSample& sample) {
  return detail::arch_loss(BundleArch::DeferCvr, h, sample);
}

// The refund-side mirror, for models trained on converted samples:
//   sum_j bce(r * s_j, z_j) + bce(r, z).
inline double loss_defer_refund(const HeadProbs& h, const LabeledSample& sample) {
  return detail::arch_loss(BundleArch::DeferRfr, h, sample);
}

// Entire-space two-task loss: bce(q_y, y) + bce(q_y * r, y&z).
inline double loss_esmm(const HeadProbs& h, const LabeledSample& sample) {
  return detail::arch_loss(BundleArch::Esmm, h, sample);
}

// Entire-space loss with delayed heads on both cascades (towers 1..4):
//   defer terms + sum_j bce(q_y * r * s_j, y&z_j) + bce(q_y * r, y&z).
inline double loss_ecad_de(const HeadProbs& h, const LabeledSample& sample) {
  return detail::arch_loss(BundleArch::EcadDe, h, sample);
}

// Full cross-window loss; adds sum_i bce(q_y * r * u_i, y_i&z) and
// sum_ij bce(q_y * r * t_ij, y_i&z_j). The caller supplies t_ij (dedicated
// towers, or u_i * s_j for the factored variant — same formula either way).
inline double loss_ecad(const HeadProbs& h, const LabeledSample& sample) {
  return detail::arch_loss(BundleArch::Ecad, h, sample);
}

// Factored variant: fills t from combine_lite_cross, then evaluates the same
// term structure without dedicated cross towers.
inline double loss_ecad_lite(const HeadProbs& h, const LabeledSample& sample) {
  return detail::arch_loss(BundleArch::EcadLite, h, sample);
}

}  // namespace ecvr
