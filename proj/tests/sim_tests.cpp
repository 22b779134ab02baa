#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ecvr/sim.hpp"

using namespace ecvr;
using Catch::Approx;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.num_fields = 2;
  c.cardinality_per_field = 5;
  c.horizon_days = 2;
  c.clicks_per_day = 500;
  c.target_cvr = 0.2;
  c.target_rfr = 0.3;
  c.seed = 11;
  return c;
}

// Exact population mean over the (small) feature space: the independent
// per-field Zipf measure times the truth sigmoid, enumerated combo by combo.
double enumerated_mean_cvr(const GroundTruth& gt) {
  const SimConfig& c = gt.config;
  std::vector<double> pmf(c.cardinality_per_field);
  {
    double total = 0.0;
    for (int k = 0; k < c.cardinality_per_field; ++k) {
      pmf[k] = 1.0 / std::pow(k + 1.0, c.zipf_exponent);
      total += pmf[k];
    }
    for (double& p : pmf) p /= total;
  }
  double mean = 0.0;
  std::vector<Feature> f(c.num_fields);
  std::vector<int> idx(c.num_fields, 0);
  for (;;) {
    double prob = 1.0;
    for (int field = 0; field < c.num_fields; ++field) {
      f[field] = {field, idx[field]};
      prob *= pmf[idx[field]];
    }
    mean += prob * gt.p_cvr(f, 0.0);
    int field = 0;
    while (field < c.num_fields && ++idx[field] == c.cardinality_per_field) {
      idx[field] = 0;
      ++field;
    }
    if (field == c.num_fields) break;
  }
  return mean;
}

}  // namespace

TEST_CASE("ground truth is deterministic in the seed", "[sim]") {
  const SimConfig c = small_config();
  const GroundTruth a = build_ground_truth(c);
  const GroundTruth b = build_ground_truth(c);
  CHECK(a.cvr_bias == b.cvr_bias);
  CHECK(a.cvr_a == b.cvr_a);
  CHECK(a.rfr_b == b.rfr_b);

  SimConfig other = c;
  other.seed = 12;
  const GroundTruth d = build_ground_truth(other);
  CHECK(a.cvr_a != d.cvr_a);
}

TEST_CASE("zero logit scale collapses to the population base rate", "[sim]") {
  SimConfig c = small_config();
  c.base_cvr_logit_scale = 0.0;
  c.base_rfr_logit_scale = 0.0;
  const GroundTruth gt = build_ground_truth(c);
  const std::vector<Feature> f1{{0, 0}, {1, 0}};
  const std::vector<Feature> f2{{0, 4}, {1, 2}};
  CHECK(gt.p_cvr(f1) == gt.p_cvr(f2));
  CHECK(gt.p_rfr(f1) == gt.p_rfr(f2));
  CHECK(gt.p_cvr(f1) == Approx(c.target_cvr).epsilon(1e-6));
  CHECK(gt.p_rfr(f1) == Approx(c.target_rfr).epsilon(1e-6));
}

TEST_CASE("true_ecvr arithmetic", "[sim]") {
  SimConfig c = small_config();
  c.base_cvr_logit_scale = 0.0;
  c.base_rfr_logit_scale = 0.0;
  c.target_cvr = 0.1;
  c.target_rfr = 0.2;
  const GroundTruth gt = build_ground_truth(c);
  const std::vector<Feature> f{{0, 1}, {1, 1}};
  CHECK(true_ecvr(gt, f) == Approx(0.08).epsilon(1e-4));
  CHECK(true_ecvr(gt, f) == Approx(gt.p_cvr(f) * (1.0 - gt.p_rfr(f))).margin(1e-15));
}

TEST_CASE("simulate is deterministic and cascade-consistent", "[sim]") {
  const SimConfig c = small_config();
  const GroundTruth gt = build_ground_truth(c);
  const auto a = simulate(gt);
  const auto b = simulate(gt);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == static_cast<std::size_t>(c.horizon_days * c.clicks_per_day));
  double prev = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].click_time == b[i].click_time);
    CHECK(a[i].features == b[i].features);
    CHECK(a[i].conversion_delay == b[i].conversion_delay);
    CHECK(a[i].refund_delay == b[i].refund_delay);
    // ordered by click time, all within the horizon
    CHECK(a[i].click_time >= prev);
    prev = a[i].click_time;
    CHECK(a[i].click_time < c.horizon_days);
    // refund requires conversion; finite delays strictly positive
    if (!a[i].converts()) CHECK_FALSE(a[i].refunds());
    if (a[i].converts()) CHECK(a[i].conversion_delay > 0.0);
    if (a[i].refunds()) CHECK(a[i].refund_delay > 0.0);
  }
}

TEST_CASE("degenerate cascade probabilities", "[sim]") {
  SimConfig c = small_config();
  c.base_cvr_logit_scale = 0.0;
  c.base_rfr_logit_scale = 0.0;

  SECTION("p_cvr near zero: no conversions, no refunds") {
    c.target_cvr = 1e-9;
    const GroundTruth gt = build_ground_truth(c);
    for (const ClickEvent& e : simulate(gt)) {
      CHECK_FALSE(e.converts());
      CHECK_FALSE(e.refunds());
    }
  }

  SECTION("certain cascade: every event converts and refunds") {
    c.target_cvr = 1.0 - 1e-12;
    c.target_rfr = 1.0 - 1e-12;
    const GroundTruth gt = build_ground_truth(c);
    for (const ClickEvent& e : simulate(gt)) {
      CHECK(e.converts());
      CHECK(e.refunds());
    }
  }
}

TEST_CASE("empirical conversion rate matches the enumerated truth mean", "[sim][slow]") {
  SimConfig c = small_config();
  c.clicks_per_day = 100000;
  c.horizon_days = 2;  // 200k events
  const GroundTruth gt = build_ground_truth(c);
  const double analytic = enumerated_mean_cvr(gt);

  const auto events = simulate(gt);
  std::size_t conversions = 0;
  for (const ClickEvent& e : events) conversions += e.converts();
  const double empirical = static_cast<double>(conversions) / events.size();

  const double se = std::sqrt(analytic * (1.0 - analytic) / events.size());
  CHECK(std::fabs(empirical - analytic) <= 3.0 * se);
  // and the Monte-Carlo bias calibration landed near its target
  CHECK(analytic == Approx(c.target_cvr).epsilon(0.05));
}

TEST_CASE("conversion delays average to the configured mean", "[sim][slow]") {
  SimConfig c = small_config();
  c.clicks_per_day = 150000;
  c.horizon_days = 2;
  c.target_cvr = 0.5;  // plenty of conversions
  c.conversion_delay_mean_days = 0.8;
  const GroundTruth gt = build_ground_truth(c);
  double sum = 0.0;
  std::size_t count = 0;
  for (const ClickEvent& e : simulate(gt)) {
    if (e.converts()) {
      sum += e.conversion_delay;
      ++count;
    }
  }
  REQUIRE(count > 100000);
  CHECK(sum / count == Approx(0.8).epsilon(0.05));
}

TEST_CASE("drift rotates the truth smoothly", "[sim]") {
  SimConfig c = small_config();
  c.drift_rate = 0.2;
  const GroundTruth gt = build_ground_truth(c);
  const std::vector<Feature> f{{0, 2}, {1, 3}};
  const double p0 = gt.p_cvr(f, 0.0);
  const double p_eps = gt.p_cvr(f, 0.01);
  const double p_far = gt.p_cvr(f, 9.0);
  CHECK(p_eps == Approx(p0).epsilon(0.05));  // smooth in time
  CHECK(p_far != p0);

  SimConfig frozen = c;
  frozen.drift_rate = 0.0;
  const GroundTruth still = build_ground_truth(frozen);
  CHECK(still.p_cvr(f, 0.0) == still.p_cvr(f, 9.0));
}
