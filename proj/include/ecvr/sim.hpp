#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ecvr/attribution.hpp"
#include "ecvr/errors.hpp"
#include "ecvr/nn.hpp"
#include "ecvr/rng.hpp"

namespace ecvr {

// Synthetic click-log generator standing in for production traffic. Ground
// truth is a pair of linear-in-features logit models (conversion, refund)
// with optional smooth temporal drift, so trained models can be checked
// against exact probabilities.
struct SimConfig {
  int num_fields = 6;
  int cardinality_per_field = 400;
  int horizon_days = 11;
  int clicks_per_day = 18182;
  double base_cvr_logit_scale = 1.0;
  double base_rfr_logit_scale = 1.0;
  double target_cvr = 0.0067;  // population mean conversion rate
  double target_rfr = 0.163;   // population mean refund rate among conversions
  double conversion_delay_mean_days = 1.0;
  double refund_delay_mean_days = 1.0;
  double drift_rate = 0.0;  // radians/day of latent-weight rotation
  double zipf_exponent = 1.0;
  // Correlation between the conversion and refund latent weights: impulse
  // purchases also return more. Shared feature structure is what lets
  // click-rich training inform the refund task.
  double cvr_rfr_weight_correlation = 0.6;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_fields <= 0 || cardinality_per_field <= 0 || horizon_days <= 0 ||
        clicks_per_day <= 0)
      throw ConfigError("sim: counts must be positive");
    if (!(conversion_delay_mean_days > 0.0) || !(refund_delay_mean_days > 0.0))
      throw ConfigError("sim: delay means must be positive");
    if (!(target_cvr > 0.0 && target_cvr < 1.0) || !(target_rfr > 0.0 && target_rfr < 1.0))
      throw ConfigError("sim: target rates must be in (0,1)");
    if (drift_rate < 0.0) throw ConfigError("sim: drift rate must be >= 0");
    if (cvr_rfr_weight_correlation < -1.0 || cvr_rfr_weight_correlation > 1.0)
      throw ConfigError("sim: weight correlation must be in [-1, 1]");
  }
};

// Exact truth model. Logits are sums of per-index latent weights; drift
// rotates each weight inside the plane spanned by two independent draws,
// which keeps the population distribution of weights stationary:
//   w(t) = A cos(rate*t) + B sin(rate*t).
struct GroundTruth {
  SimConfig config;
  // [field][index], each N(0, 1/num_fields) so the summed logit has unit-ish
  // spread before scaling
  std::vector<std::vector<double>> cvr_a, cvr_b;
  std::vector<std::vector<double>> rfr_a, rfr_b;
  double cvr_bias = 0.0;
  double rfr_bias = 0.0;
  std::vector<double> feature_cdf;  // shared Zipf CDF over indices

  double cvr_logit(std::span<const Feature> features, double t) const {
    return cvr_bias + config.base_cvr_logit_scale * rotated_sum(cvr_a, cvr_b, features, t);
  }
  double rfr_logit(std::span<const Feature> features, double t) const {
    return rfr_bias + config.base_rfr_logit_scale * rotated_sum(rfr_a, rfr_b, features, t);
  }
  double p_cvr(std::span<const Feature> features, double t = 0.0) const {
    return sigmoid(cvr_logit(features, t));
  }
  double p_rfr(std::span<const Feature> features, double t = 0.0) const {
    return sigmoid(rfr_logit(features, t));
  }

 private:
  double rotated_sum(const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b,
                     std::span<const Feature> features, double t) const {
    const double angle = config.drift_rate * t;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    double sum = 0.0;
    for (const Feature& f : features) {
      if (f.field < 0 || f.field >= config.num_fields || f.index < 0 ||
          f.index >= config.cardinality_per_field)
        throw DataError("ground truth: feature out of range");
      sum += c * a[f.field][f.index] + s * b[f.field][f.index];
    }
    return sum;
  }
};

// True effective conversion rate; test-side oracle only, models never see it.
inline double true_ecvr(const GroundTruth& gt, std::span<const Feature> features, double t = 0.0) {
  const double p_cvr = gt.p_cvr(features, t);
  const double p_rfr = gt.p_rfr(features, t);
  return p_cvr * (1.0 - p_rfr);
}

namespace sim_detail {

inline std::vector<double> zipf_cdf(int cardinality, double exponent) {
  std::vector<double> cdf(cardinality);
  double total = 0.0;
  for (int k = 0; k < cardinality; ++k) {
    total += 1.0 / std::pow(static_cast<double>(k + 1), exponent);
    cdf[k] = total;
  }
  for (double& c : cdf) c /= total;
  cdf.back() = 1.0;
  return cdf;
}

inline int draw_index(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform01();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                   static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

inline std::vector<Feature> draw_features(const GroundTruth& gt, Rng& rng) {
  std::vector<Feature> f(gt.config.num_fields);
  for (int field = 0; field < gt.config.num_fields; ++field)
    f[field] = {field, draw_index(gt.feature_cdf, rng)};
  return f;
}

// Bisects a logit bias so the weighted Monte-Carlo mean of
// sigmoid(bias + logit) hits the target rate.
inline double bisect_bias(std::span<const double> logits, std::span<const double> weights,
                          double target) {
  double weight_total = 0.0;
  for (double w : weights) weight_total += w;
  double lo = -30.0, hi = 30.0;
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) mean += weights[i] * sigmoid(mid + logits[i]);
    mean /= weight_total;
    (mean < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Calibrates both biases at t = 0. The conversion bias targets the population
// mean conversion rate; the refund bias targets the refund rate *among
// conversions*, i.e. under the feature distribution tilted by p_cvr —
// otherwise chance correlations between the two weight tables shift the
// realized refunds/conversions ratio well off target.
inline void calibrate_biases(GroundTruth& gt, std::uint64_t seed) {
  constexpr int kProbes = 20000;
  Rng rng(seed);
  std::vector<double> cvr_logits(kProbes), rfr_logits(kProbes);
  for (int p = 0; p < kProbes; ++p) {
    double cvr_sum = 0.0, rfr_sum = 0.0;
    for (int field = 0; field < gt.config.num_fields; ++field) {
      const int index = draw_index(gt.feature_cdf, rng);
      cvr_sum += gt.cvr_a[field][index];
      rfr_sum += gt.rfr_a[field][index];
    }
    cvr_logits[p] = gt.config.base_cvr_logit_scale * cvr_sum;
    rfr_logits[p] = gt.config.base_rfr_logit_scale * rfr_sum;
  }
  const std::vector<double> ones(kProbes, 1.0);
  gt.cvr_bias = bisect_bias(cvr_logits, ones, gt.config.target_cvr);
  std::vector<double> conv_weight(kProbes);
  for (int p = 0; p < kProbes; ++p) conv_weight[p] = sigmoid(gt.cvr_bias + cvr_logits[p]);
  gt.rfr_bias = bisect_bias(rfr_logits, conv_weight, gt.config.target_rfr);
}

}  // namespace sim_detail

inline GroundTruth build_ground_truth(const SimConfig& config) {
  config.validate();
  GroundTruth gt;
  gt.config = config;
  gt.feature_cdf = sim_detail::zipf_cdf(config.cardinality_per_field, config.zipf_exponent);

  const double sd = 1.0 / std::sqrt(static_cast<double>(config.num_fields));
  auto draw_table = [&](std::uint64_t tag) {
    Rng rng(substream_seed(config.seed, tag));
    std::vector<std::vector<double>> table(config.num_fields);
    for (auto& row : table) {
      row.resize(config.cardinality_per_field);
      for (double& w : row) w = sd * rng.gaussian();
    }
    return table;
  };
  gt.cvr_a = draw_table(hash_bytes("cvr_a"));
  gt.cvr_b = draw_table(hash_bytes("cvr_b"));
  gt.rfr_a = draw_table(hash_bytes("rfr_a"));
  gt.rfr_b = draw_table(hash_bytes("rfr_b"));

  // mix the refund weights towards the conversion weights so the two truth
  // surfaces share feature structure at the configured correlation
  const double rho = config.cvr_rfr_weight_correlation;
  const double own = std::sqrt(1.0 - rho * rho);
  for (int f = 0; f < config.num_fields; ++f) {
    for (int k = 0; k < config.cardinality_per_field; ++k) {
      gt.rfr_a[f][k] = rho * gt.cvr_a[f][k] + own * gt.rfr_a[f][k];
      gt.rfr_b[f][k] = rho * gt.cvr_b[f][k] + own * gt.rfr_b[f][k];
    }
  }

  sim_detail::calibrate_biases(gt, substream_seed(config.seed, "calib"));
  return gt;
}

// Generates the full horizon, ordered by click time. Each day uses an
// independent substream, so days could be produced in parallel and merged.
inline std::vector<ClickEvent> simulate(const GroundTruth& gt) {
  const SimConfig& c = gt.config;
  std::vector<ClickEvent> events;
  events.reserve(static_cast<std::size_t>(c.horizon_days) * c.clicks_per_day);
  for (int day = 0; day < c.horizon_days; ++day) {
    Rng rng(substream_seed(c.seed, 0x5117ULL * 31 + static_cast<std::uint64_t>(day)));
    const std::size_t day_start = events.size();
    for (int k = 0; k < c.clicks_per_day; ++k) {
      ClickEvent e;
      e.click_time = day + rng.uniform01();
      e.features = sim_detail::draw_features(gt, rng);
      if (rng.uniform01() < gt.p_cvr(e.features, e.click_time)) {
        e.conversion_delay = rng.exponential(c.conversion_delay_mean_days);
        if (rng.uniform01() < gt.p_rfr(e.features, e.click_time)) {
          e.refund_delay = rng.exponential(c.refund_delay_mean_days);
        }
      }
      events.push_back(std::move(e));
    }
    std::stable_sort(events.begin() + static_cast<std::ptrdiff_t>(day_start), events.end(),
                     [](const ClickEvent& a, const ClickEvent& b) {
                       return a.click_time < b.click_time;
                     });
  }
  return events;
}

}  // namespace ecvr
