#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "ecvr/errors.hpp"

namespace ecvr {

namespace stats_detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace stats_detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * stats_detail::betacf(a, b, x) / a;
  return 1.0 - front * stats_detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw MetricError("t-test: non-positive degrees of freedom");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

struct PairedTTest {
  double t = 0.0;
  double p = 1.0;
  bool significant = false;  // at the 95% level
};

// Paired two-sided t-test on per-shard differences.
inline PairedTTest paired_t_test(std::span<const double> diffs, double alpha = 0.05) {
  const std::size_t k = diffs.size();
  if (k < 2) throw MetricError("t-test: needs at least two paired differences");
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double var = ss / static_cast<double>(k - 1);

  PairedTTest out;
  if (var == 0.0) {
    // all differences identical: either no effect at all or a deterministic one
    out.t = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() * (mean > 0 ? 1 : -1);
    out.p = mean == 0.0 ? 1.0 : 0.0;
  } else {
    out.t = mean / std::sqrt(var / static_cast<double>(k));
    out.p = student_t_two_sided_p(out.t, static_cast<double>(k - 1));
  }
  out.significant = out.p < alpha;
  return out;
}

}  // namespace ecvr
