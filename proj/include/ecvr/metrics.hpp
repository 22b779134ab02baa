#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ecvr/errors.hpp"

namespace ecvr {

struct Scored {
  double score = 0.0;
  int label = 0;  // 0 or 1
};

// Exact ROC AUC via the rank statistic: the fraction of (positive, negative)
// pairs ranked correctly, ties counted 1/2. Tie bookkeeping is integer-exact
// (pair counts are doubled so the half never rounds), so the result is
// independent of input order.
inline double auc(std::span<const Scored> set) {
  std::vector<std::uint32_t> order(set.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return set[a].score < set[b].score;
  });

  std::uint64_t positives = 0, negatives = 0;
  std::uint64_t twice_correct = 0;  // 2*(wins) + (ties)
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j < order.size() && set[order[j]].score == set[order[i]].score) {
      group_pos += static_cast<std::uint64_t>(set[order[j]].label != 0);
      group_neg += static_cast<std::uint64_t>(set[order[j]].label == 0);
      ++j;
    }
    // negatives strictly below the group score: counted twice; in-group
    // negatives tie: counted once
    twice_correct += group_pos * (2 * negatives + group_neg);
    positives += group_pos;
    negatives += group_neg;
    i = j;
  }
  if (positives == 0 || negatives == 0)
    throw MetricError("auc: needs at least one positive and one negative");
  return static_cast<double>(twice_correct) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

// Area under the precision-recall curve with step interpolation: sweeping
// thresholds downwards through distinct scores, each achieved recall level
// contributes (recall_k - recall_{k-1}) * precision_k. Equal scores form one
// operating point, so tie handling is deterministic.
inline double pr_auc(std::span<const Scored> set) {
  std::vector<std::uint32_t> order(set.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return set[a].score > set[b].score;
  });

  std::uint64_t total_pos = 0;
  for (const Scored& s : set) total_pos += static_cast<std::uint64_t>(s.label != 0);
  if (total_pos == 0) throw MetricError("pr_auc: needs at least one positive");

  double area = 0.0;
  std::uint64_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && set[order[j]].score == set[order[i]].score) {
      tp += static_cast<std::uint64_t>(set[order[j]].label != 0);
      fp += static_cast<std::uint64_t>(set[order[j]].label == 0);
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

// Relative improvement of `method` between `base` (0%) and `oracle` (100%),
// as a percentage; negative when the method loses to the base.
inline double ri_percent(double method, double base, double oracle) {
  if (oracle == base) throw MetricError("ri: oracle equals base, improvement undefined");
  return 100.0 * (method - base) / (oracle - base);
}

struct CalibrationBucket {
  double mean_score = 0.0;
  double positive_rate = 0.0;
  std::size_t count = 0;
};

struct CalibrationReport {
  double mean_score = 0.0;
  double positive_rate = 0.0;
  double ratio = 0.0;  // mean predicted / empirical rate; NaN with no positives
  std::vector<CalibrationBucket> buckets;
};

// Overall and per-bucket calibration: samples sorted by score and cut into
// `bucket_count` equal-count buckets (first buckets absorb the remainder).
inline CalibrationReport calibration(std::span<const Scored> set, int bucket_count = 10) {
  if (set.empty()) throw MetricError("calibration: empty input");
  CalibrationReport rep;
  double sum = 0.0;
  std::uint64_t pos = 0;
  for (const Scored& s : set) {
    sum += s.score;
    pos += static_cast<std::uint64_t>(s.label != 0);
  }
  rep.mean_score = sum / static_cast<double>(set.size());
  rep.positive_rate = static_cast<double>(pos) / static_cast<double>(set.size());
  rep.ratio = rep.positive_rate > 0.0 ? rep.mean_score / rep.positive_rate
                                      : std::numeric_limits<double>::quiet_NaN();

  std::vector<std::uint32_t> order(set.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return set[a].score < set[b].score;
  });
  const int buckets = std::min<int>(bucket_count, static_cast<int>(set.size()));
  const std::size_t base_size = set.size() / buckets;
  const std::size_t remainder = set.size() % buckets;
  std::size_t at = 0;
  for (int b = 0; b < buckets; ++b) {
    const std::size_t size = base_size + (static_cast<std::size_t>(b) < remainder ? 1 : 0);
    CalibrationBucket bucket;
    bucket.count = size;
    for (std::size_t k = 0; k < size; ++k) {
      const Scored& s = set[order[at + k]];
      bucket.mean_score += s.score;
      bucket.positive_rate += static_cast<double>(s.label != 0);
    }
    bucket.mean_score /= static_cast<double>(size);
    bucket.positive_rate /= static_cast<double>(size);
    rep.buckets.push_back(bucket);
    at += size;
  }
  return rep;
}

}  // namespace ecvr
