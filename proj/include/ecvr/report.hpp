#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecvr/metrics.hpp"
#include "ecvr/stats.hpp"
#include "ecvr/variants.hpp"

namespace ecvr {

// Per-task shard metrics for one variant. Shard vectors must line up across
// variants (same shard partition of the test set).
struct TaskMetrics {
  std::vector<double> auc_shards;
  std::vector<double> pr_auc_shards;
  double calibration_ratio = std::numeric_limits<double>::quiet_NaN();

  double auc_mean() const {
    double s = 0.0;
    for (double v : auc_shards) s += v;
    return s / static_cast<double>(auc_shards.size());
  }
  double pr_auc_mean() const {
    double s = 0.0;
    for (double v : pr_auc_shards) s += v;
    return s / static_cast<double>(pr_auc_shards.size());
  }
};

struct VariantEval {
  ModelVariant variant = ModelVariant::CvrBase;
  std::map<Task, TaskMetrics> tasks;
};

// Significance of a variant against the reference on a task:
//   "ref"   the reference row itself
//   "ref+"  reference significantly better than this variant (95%, paired t)
//   "ref-"  reference significantly worse
//   "ns"    not significant
//   "-"     not comparable (either side missing the task)
struct ReportRow {
  ModelVariant variant = ModelVariant::CvrBase;
  Task task = Task::Cvr;
  std::optional<double> auc, ri_auc, pr_auc, ri_pr_auc, calibration_ratio;
  std::string significance = "-";
};

struct EvalReport {
  int shard_count = 0;
  std::vector<ReportRow> rows;

  const ReportRow& row(ModelVariant v, Task t) const {
    for (const ReportRow& r : rows)
      if (r.variant == v && r.task == t) return r;
    throw ConfigError("report: missing row");
  }
};

// The base model of each task, the 0% anchor of relative improvement.
inline ModelVariant ri_base(Task t) {
  switch (t) {
    case Task::Cvr: return ModelVariant::CvrBase;
    case Task::Rfr: return ModelVariant::RfrBase;
    case Task::Ecvr: return ModelVariant::EcvrBase;
  }
  throw ConfigError("unknown task");
}

// Assembles the report table: shard-averaged AUC / PR-AUC, relative
// improvement against the task base and the oracle, and paired per-shard
// significance against `reference` (ECAD by default). Emits one row per
// (variant, task) pair; unsupported tasks keep empty cells.
inline EvalReport make_report(std::span<const VariantEval> evals,
                              ModelVariant reference = ModelVariant::Ecad) {
  EvalReport report;
  auto find = [&](ModelVariant v) -> const VariantEval* {
    for (const VariantEval& e : evals)
      if (e.variant == v) return &e;
    return nullptr;
  };

  // every present (variant, task) must use the same shard partition
  int shards = 0;
  for (const VariantEval& e : evals) {
    for (const auto& [task, tm] : e.tasks) {
      const int k = static_cast<int>(tm.auc_shards.size());
      if (k == 0 || tm.pr_auc_shards.size() != tm.auc_shards.size())
        throw DataError("report: empty or inconsistent shard metrics");
      if (shards == 0) shards = k;
      if (k != shards) throw DataError("report: shard count mismatch across variants");
    }
  }
  report.shard_count = shards;

  const VariantEval* ref = find(reference);
  for (const VariantEval& e : evals) {
    for (Task task : all_tasks()) {
      ReportRow row;
      row.variant = e.variant;
      row.task = task;
      const auto it = e.tasks.find(task);
      if (it != e.tasks.end()) {
        const TaskMetrics& tm = it->second;
        row.auc = tm.auc_mean();
        row.pr_auc = tm.pr_auc_mean();
        if (!std::isnan(tm.calibration_ratio)) row.calibration_ratio = tm.calibration_ratio;

        const VariantEval* base = find(ri_base(task));
        const VariantEval* oracle = find(ModelVariant::EsmmOracle);
        if (base && oracle && base->tasks.count(task) && oracle->tasks.count(task)) {
          const double b_auc = base->tasks.at(task).auc_mean();
          const double o_auc = oracle->tasks.at(task).auc_mean();
          const double b_pr = base->tasks.at(task).pr_auc_mean();
          const double o_pr = oracle->tasks.at(task).pr_auc_mean();
          if (o_auc != b_auc) row.ri_auc = ri_percent(*row.auc, b_auc, o_auc);
          if (o_pr != b_pr) row.ri_pr_auc = ri_percent(*row.pr_auc, b_pr, o_pr);
        }

        if (e.variant == reference) {
          row.significance = "ref";
        } else if (ref && ref->tasks.count(task)) {
          const auto& ref_shards = ref->tasks.at(task).auc_shards;
          std::vector<double> diffs(ref_shards.size());
          for (std::size_t k = 0; k < diffs.size(); ++k)
            diffs[k] = ref_shards[k] - tm.auc_shards[k];
          const PairedTTest t = paired_t_test(diffs);
          row.significance = !t.significant ? "ns" : (t.t > 0 ? "ref+" : "ref-");
        }
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

namespace report_detail {

inline std::string fmt(const std::optional<double>& v, const char* spec) {
  if (!v) return "-";
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, *v);
  return buf;
}

}  // namespace report_detail

inline std::string to_tsv(const EvalReport& report) {
  std::string out = "variant\ttask\tauc\tri_auc\tpr_auc\tri_pr_auc\tcalibration\tsignificance\n";
  for (const ReportRow& r : report.rows) {
    out += variant_name(r.variant) + "\t" + task_name(r.task) + "\t" +
           report_detail::fmt(r.auc, "%.6f") + "\t" + report_detail::fmt(r.ri_auc, "%.2f%%") +
           "\t" + report_detail::fmt(r.pr_auc, "%.6f") + "\t" +
           report_detail::fmt(r.ri_pr_auc, "%.2f%%") + "\t" +
           report_detail::fmt(r.calibration_ratio, "%.4f") + "\t" + r.significance + "\n";
  }
  return out;
}

inline std::string to_text(const EvalReport& report) {
  static constexpr const char* kHeader[8] = {"variant",   "task",      "auc",
                                             "ri_auc",    "pr_auc",    "ri_pr_auc",
                                             "calibration", "significance"};
  std::vector<std::vector<std::string>> cells;
  for (const ReportRow& r : report.rows) {
    cells.push_back({variant_name(r.variant), task_name(r.task),
                     report_detail::fmt(r.auc, "%.6f"), report_detail::fmt(r.ri_auc, "%.2f%%"),
                     report_detail::fmt(r.pr_auc, "%.6f"),
                     report_detail::fmt(r.ri_pr_auc, "%.2f%%"),
                     report_detail::fmt(r.calibration_ratio, "%.4f"), r.significance});
  }
  std::size_t width[8];
  for (int c = 0; c < 8; ++c) {
    width[c] = std::string(kHeader[c]).size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  auto pad = [&](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size() + 2, ' ');
  };
  std::string out;
  for (int c = 0; c < 8; ++c) out += pad(kHeader[c], width[c]);
  out += "\n";
  for (const auto& row : cells) {
    for (int c = 0; c < 8; ++c) out += pad(row[c], width[c]);
    out += "\n";
  }
  return out;
}

}  // namespace ecvr
