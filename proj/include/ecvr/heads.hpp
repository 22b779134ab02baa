#pragma once

#include <vector>

#include "ecvr/errors.hpp"
#include "ecvr/variants.hpp"

namespace ecvr {

// Conditional head outputs of one bundle, by role. Sizes follow the window
// config: a/u have n entries, s has m, t has n*m (row-major, i outer).
struct HeadProbs {
  double q_y = 0.0;  // p(y=1 | x)
  double r = 0.0;    // p(z=1 | y=1, x)
  double eff = 0.0;  // p(y=1, z=0 | x), single-tower baseline only
  std::vector<double> a;
  std::vector<double> s;
  std::vector<double> u;
  std::vector<double> t;

  int n() const { return static_cast<int>(a.size()); }
  int m() const { return static_cast<int>(s.size()); }
};

// p_ecvr = p_cvr * (1 - p_rfr)
inline double combine_ecvr(double q_y, double r) { return q_y * (1.0 - r); }

// p_cvrfr = p_cvr * p_rfr: the joint is formed by multiplication so it can
// be trained on the whole clicked space without dividing small numbers.
inline double combine_cvrfr(double q_y, double r) { return q_y * r; }

// Conditional head -> joint over the conditioning event's space.
inline double combine_joint(double conditional, double conditioning_joint) {
  return conditional * conditioning_joint;
}

// The conditional refund rate recovered from entire-space joints.
inline double derive_rfr(double cvrfr, double cvr) {
  if (!(cvr > 0.0)) throw ConfigError("derive_rfr: p_cvr must be positive");
  return cvrfr / cvr;
}

// t_ij approximated as u_i * s_j: conversion and refund delays treated as
// independent among refunded conversions.
inline double combine_lite_cross(double u_i, double s_j) { return u_i * s_j; }

// Joint probabilities over the clicked-sample space, derived from the
// conditional heads. Every entry is a product of (0,1) factors, so the
// ordering p_cross <= p_cvrfr <= p_cvr holds by construction.
struct JointSet {
  double p_cvr = 0.0;
  double p_rfr = 0.0;
  double p_cvrfr = 0.0;
  double p_ecvr = 0.0;
  std::vector<double> conv_within;           // p(w<W_i, y=1 | x)
  std::vector<double> refund_within;         // p(v<V_j, z=1, y=1 | x)
  std::vector<double> conv_within_refunded;  // p(w<W_i, z=1, y=1 | x)
  std::vector<double> cross_within;          // p(v<V_j, w<W_i, z=1, y=1 | x), row-major
};

inline JointSet derive_joints(const HeadProbs& h) {
  JointSet js;
  js.p_cvr = h.q_y;
  js.p_rfr = h.r;
  js.p_cvrfr = combine_cvrfr(h.q_y, h.r);
  js.p_ecvr = combine_ecvr(h.q_y, h.r);
  js.conv_within.reserve(h.a.size());
  for (double ai : h.a) js.conv_within.push_back(combine_joint(ai, h.q_y));
  js.refund_within.reserve(h.s.size());
  for (double sj : h.s) js.refund_within.push_back(combine_joint(sj, js.p_cvrfr));
  js.conv_within_refunded.reserve(h.u.size());
  for (double ui : h.u) js.conv_within_refunded.push_back(combine_joint(ui, js.p_cvrfr));
  js.cross_within.reserve(h.t.size());
  for (double tij : h.t) js.cross_within.push_back(combine_joint(tij, js.p_cvrfr));
  return js;
}

}  // namespace ecvr
