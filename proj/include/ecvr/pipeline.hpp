#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecvr/attributed_io.hpp"
#include "ecvr/checkpoint.hpp"
#include "ecvr/config.hpp"
#include "ecvr/event_io.hpp"
#include "ecvr/log.hpp"
#include "ecvr/metrics.hpp"
#include "ecvr/model.hpp"
#include "ecvr/report.hpp"
#include "ecvr/sim.hpp"
#include "ecvr/train.hpp"

namespace ecvr {

struct SimCounts {
  std::uint64_t clicks = 0;
  std::uint64_t conversions = 0;
  std::uint64_t refunds = 0;
  std::uint64_t effective = 0;  // conversions that were never refunded
};

inline SimCounts count_events(std::span<const ClickEvent> events) {
  SimCounts c;
  c.clicks = events.size();
  for (const ClickEvent& e : events) {
    if (e.converts()) {
      ++c.conversions;
      if (e.refunds()) ++c.refunds;
      else ++c.effective;
    }
  }
  return c;
}

inline DatasetMeta dataset_meta(const ExperimentConfig& cfg) {
  return DatasetMeta{cfg.sim.num_fields, cfg.sim.cardinality_per_field, cfg.sim.horizon_days,
                     cfg.sim_seed()};
}

inline std::vector<ClickEvent> simulate_events(const ExperimentConfig& cfg) {
  SimConfig sim = cfg.sim;
  sim.seed = cfg.sim_seed();
  const GroundTruth gt = build_ground_truth(sim);
  return simulate(gt);
}

// simulate: generate the configured horizon and write the event log.
inline SimCounts cmd_simulate(const ExperimentConfig& cfg, const std::string& out_path) {
  cfg.validate();
  const std::vector<ClickEvent> events = simulate_events(cfg);
  write_events(out_path, dataset_meta(cfg), events);
  return count_events(events);
}

// attribute: label an event log at a cutoff and write the attributed set.
inline void cmd_attribute(const std::string& events_path, double cutoff,
                          const ExperimentConfig& cfg, const std::string& out_path) {
  cfg.windows.validate();
  const EventDataset ds = read_events(events_path);
  AttributedDataset out = attribute_all(ds.events, cutoff, cfg.windows, ds.meta);
  if (cfg.fake_negatives) {
    const LabelLayout layout = out.layout();
    for (LabeledSample& s : out.samples) s = to_fake_negative(std::move(s), layout);
  }
  write_attributed(out_path, out);
}

// train: fit one variant on an attributed dataset and write its checkpoint.
inline TrainedModel cmd_train(const std::string& attributed_path, ModelVariant variant,
                              const ExperimentConfig& cfg, const std::string& out_ckpt) {
  const AttributedDataset ds = read_attributed(attributed_path);
  TrainedModel model =
      train_variant(variant, ds.samples, ds.cutoff, ds.windows, cfg.net, ds.meta.num_fields,
                    ds.meta.cardinality, cfg.train, cfg.seed);
  if (!out_ckpt.empty()) save_checkpoint(model, config_echo(cfg), out_ckpt);
  return model;
}

struct TestSets {
  // fully matured labels (cutoff = +inf attribution)
  std::vector<LabeledSample> samples;
  std::vector<int> shard_of;  // per sample, uniform random shard
  LabelLayout layout;
};

inline TestSets prepare_test_sets(std::span<const ClickEvent> test_events,
                                  const WindowConfig& wc, int shards, std::uint64_t seed) {
  TestSets ts;
  ts.layout = LabelLayout(wc.n(), wc.m());
  Rng rng(substream_seed(seed, "test_shards"));
  for (const ClickEvent& e : test_events) {
    ts.samples.push_back(attribute(e, kInf, wc));
    ts.shard_of.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(shards))));
  }
  return ts;
}

// Scores a model on the matured test set and folds per-shard AUC / PR-AUC.
// RFR is evaluated on converted samples only (it is a conditional rate);
// CVR and ECVR on every clicked test sample.
inline VariantEval evaluate_model(const TrainedModel& model, const TestSets& ts, int shards) {
  VariantEval ev;
  ev.variant = model.variant;
  BundleState st;
  for (Task task : all_tasks()) {
    if (!supports_task(model.variant, task)) continue;
    std::vector<std::vector<Scored>> per_shard(shards);
    std::vector<Scored> all;
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
      const LabeledSample& s = ts.samples[i];
      int label = 0;
      switch (task) {
        case Task::Cvr: label = s.value(ts.layout.slot_y()); break;
        case Task::Rfr:
          if (!s.value(ts.layout.slot_y())) continue;  // conditional on conversion
          label = s.value(ts.layout.slot_z());
          break;
        case Task::Ecvr: label = s.value(ts.layout.slot_effective()); break;
      }
      const Scored scored{predict(model, s.event.features, task, st), label};
      per_shard[ts.shard_of[i]].push_back(scored);
      all.push_back(scored);
    }
    TaskMetrics tm;
    for (const auto& shard : per_shard) {
      tm.auc_shards.push_back(auc(shard));
      tm.pr_auc_shards.push_back(pr_auc(shard));
    }
    tm.calibration_ratio = calibration(all).ratio;
    ev.tasks[task] = tm;
  }
  return ev;
}

// evaluate: score trained checkpoints on a matured test event log.
inline EvalReport cmd_evaluate(const std::string& test_events_path,
                               std::span<const std::string> checkpoint_paths,
                               const ExperimentConfig& cfg) {
  const EventDataset test = read_events(test_events_path);
  std::vector<VariantEval> evals;
  WindowConfig wc;
  bool first = true;
  TestSets ts;
  for (const std::string& path : checkpoint_paths) {
    const LoadedCheckpoint ckpt = load_checkpoint(path);
    if (first) {
      wc = ckpt.model.windows;
      ts = prepare_test_sets(test.events, wc, cfg.shards, cfg.seed);
      first = false;
    } else if (window_spec(ckpt.model.windows) != window_spec(wc)) {
      throw ConfigError("evaluate: checkpoints attributed with different window configs");
    }
    evals.push_back(evaluate_model(ckpt.model, ts, cfg.shards));
  }
  return make_report(evals);
}

struct ReplicateResult {
  SimCounts counts;
  EvalReport report;
  std::string report_tsv;
  std::string report_text;
};

// replicate: the full pipeline. Simulate the horizon, attribute the training
// days at the cutoff (and at +inf for the oracle), train every configured
// variant, evaluate all of them on the matured test day, and emit the report.
inline ReplicateResult cmd_replicate(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/checkpoints");
  }

  log_info("replicate: simulating %d days x %d clicks", cfg.sim.horizon_days,
           cfg.sim.clicks_per_day);
  const std::vector<ClickEvent> events = simulate_events(cfg);

  std::vector<ClickEvent> train_events, test_events;
  for (const ClickEvent& e : events) {
    if (e.click_time < cfg.train_cutoff()) train_events.push_back(e);
    else if (e.click_time >= cfg.test_begin() && e.click_time < cfg.test_end())
      test_events.push_back(e);
  }

  const DatasetMeta meta = dataset_meta(cfg);
  AttributedDataset observed =
      attribute_all(train_events, cfg.train_cutoff(), cfg.windows, meta);
  if (cfg.fake_negatives) {
    const LabelLayout layout = observed.layout();
    for (LabeledSample& s : observed.samples) s = to_fake_negative(std::move(s), layout);
  }
  const AttributedDataset matured = attribute_all(train_events, kInf, cfg.windows, meta);
  const TestSets ts = prepare_test_sets(test_events, cfg.windows, cfg.shards, cfg.seed);

  ReplicateResult result;
  result.counts = count_events(events);

  std::vector<VariantEval> evals;
  for (ModelVariant v : cfg.variants) {
    const bool oracle = v == ModelVariant::EsmmOracle;
    const AttributedDataset& data = oracle ? matured : observed;
    log_info("replicate: training %s on %zu samples", variant_name(v).c_str(),
             data.samples.size());
    TrainedModel model =
        train_variant(v, data.samples, data.cutoff, cfg.windows, cfg.net, meta.num_fields,
                      meta.cardinality, cfg.train, cfg.seed);
    if (!out_dir.empty())
      save_checkpoint(model, config_echo(cfg),
                      out_dir + "/checkpoints/" + variant_name(v) + ".ckpt");
    evals.push_back(evaluate_model(model, ts, cfg.shards));
  }

  result.report = make_report(evals);
  result.report_tsv = to_tsv(result.report);
  result.report_text = to_text(result.report);
  if (!out_dir.empty()) {
    std::ofstream tsv(out_dir + "/report.tsv");
    tsv << result.report_tsv;
    std::ofstream txt(out_dir + "/report.txt");
    txt << result.report_text;
    std::ofstream echo(out_dir + "/config.ini");
    echo << config_echo(cfg);
    if (!tsv || !txt || !echo) throw DataError("replicate: failed writing outputs");
  }
  return result;
}

}  // namespace ecvr
