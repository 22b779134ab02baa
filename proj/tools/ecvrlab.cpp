// ecvrlab: synthetic-click-log laboratory for effective-conversion modeling.
// Subcommands: simulate, attribute, train, evaluate, replicate.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecvr/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitMetric = 4;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

ecvr::ExperimentConfig load(const CommonOpts& opts, bool replication_defaults) {
  ecvr::ExperimentConfig cfg = replication_defaults
                                   ? ecvr::ExperimentConfig::replication_default()
                                   : ecvr::ExperimentConfig{};
  if (!opts.config_path.empty()) cfg = ecvr::load_config(opts.config_path, std::move(cfg));
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.sim_seed_overridden = false;  // --seed re-derives the simulation stream
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config file (INI-style)");
  cmd->add_option("--seed", opts.seed, "Master seed override");
}

double parse_cutoff(const std::string& s) {
  if (s == "inf") return ecvr::kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ecvr::ConfigError("bad --cutoff-day value '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascade delayed-feedback conversion modeling lab"};
  app.require_subcommand(1);

  CommonOpts sim_opts, attr_opts, train_opts, eval_opts, rep_opts;
  std::string out_path, in_path, cutoff_day = "inf", variant_name;
  std::vector<std::string> checkpoints;
  std::string test_path;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic click log");
  add_common(sim, sim_opts);
  sim->add_option("--out", out_path, "Output event file")->required();

  auto* attr = app.add_subcommand("attribute", "Label an event log at a cutoff");
  add_common(attr, attr_opts);
  attr->add_option("--in", in_path, "Input event file")->required();
  attr->add_option("--cutoff-day", cutoff_day, "Cutoff in days, or 'inf'");
  attr->add_option("--out", out_path, "Output attributed file")->required();

  auto* train = app.add_subcommand("train", "Train one variant on an attributed dataset");
  add_common(train, train_opts);
  train->add_option("--in", in_path, "Input attributed file")->required();
  train->add_option("--variant", variant_name, "Model variant")->required();
  train->add_option("--out", out_path, "Output checkpoint")->required();

  auto* eval = app.add_subcommand("evaluate", "Score checkpoints on a test event log");
  add_common(eval, eval_opts);
  eval->add_option("--test", test_path, "Test event file (labels matured)")->required();
  eval->add_option("--ckpt", checkpoints, "Checkpoint file(s)")->required();
  eval->add_option("--out", out_path, "Report path prefix (writes .tsv and .txt)");

  auto* rep = app.add_subcommand("replicate", "Full pipeline: simulate, train all, evaluate");
  add_common(rep, rep_opts);
  rep->add_option("--out", out_path, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto cfg = load(sim_opts, false);
      const auto counts = ecvr::cmd_simulate(cfg, out_path);
      std::printf("clicks %llu\nconversions %llu\nrefunds %llu\neffective_conversions %llu\n",
                  static_cast<unsigned long long>(counts.clicks),
                  static_cast<unsigned long long>(counts.conversions),
                  static_cast<unsigned long long>(counts.refunds),
                  static_cast<unsigned long long>(counts.effective));
    } else if (attr->parsed()) {
      const auto cfg = load(attr_opts, false);
      ecvr::cmd_attribute(in_path, parse_cutoff(cutoff_day), cfg, out_path);
    } else if (train->parsed()) {
      const auto cfg = load(train_opts, false);
      ecvr::cmd_train(in_path, ecvr::parse_variant(variant_name), cfg, out_path);
    } else if (eval->parsed()) {
      const auto cfg = load(eval_opts, false);
      const auto report = ecvr::cmd_evaluate(test_path, checkpoints, cfg);
      const std::string text = ecvr::to_text(report);
      std::fputs(text.c_str(), stdout);
      if (!out_path.empty()) {
        std::ofstream tsv(out_path + ".tsv");
        tsv << ecvr::to_tsv(report);
        std::ofstream txt(out_path + ".txt");
        txt << text;
        if (!tsv || !txt) throw ecvr::DataError("evaluate: failed writing report files");
      }
    } else if (rep->parsed()) {
      const auto cfg = load(rep_opts, true);
      const auto result = ecvr::cmd_replicate(cfg, out_path);
      std::fputs(result.report_text.c_str(), stdout);
    }
  } catch (const ecvr::MetricError& e) {
    std::fprintf(stderr, "metric error: %s\n", e.what());
    return kExitMetric;
  } catch (const ecvr::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const ecvr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
