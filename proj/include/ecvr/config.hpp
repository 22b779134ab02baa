#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ecvr/errors.hpp"
#include "ecvr/model.hpp"
#include "ecvr/sim.hpp"
#include "ecvr/train.hpp"
#include "ecvr/variants.hpp"
#include "ecvr/windows.hpp"

namespace ecvr {

// Full experiment description: simulator, windows, network, optimizer,
// training schedule, and the evaluation protocol. Flat key/value text with
// [sections]; every field has a default and the effective values are echoed
// into outputs for provenance.
struct ExperimentConfig {
  SimConfig sim;
  WindowConfig windows;
  NetSizes net;
  TrainParams train;
  bool fake_negatives = false;  // treat undetermined labels as negatives (ablation)

  std::vector<ModelVariant> variants = all_variants();
  int train_days = 10;
  int test_day = 11;  // 1-based; the day after the training horizon
  int shards = 10;
  std::uint64_t seed = 1;
  bool sim_seed_overridden = false;

  // Replication preset: denser rates than the bare simulator defaults so
  // every test shard holds enough positives for stable per-shard metrics,
  // plus feature sparsity and drift strong enough that the sparsity and
  // freshness effects the ten-way comparison measures actually register.
  static ExperimentConfig replication_default() {
    ExperimentConfig cfg;
    cfg.sim.target_cvr = 0.04;
    cfg.sim.target_rfr = 0.22;
    cfg.sim.drift_rate = 0.06;
    cfg.sim.cardinality_per_field = 600;
    cfg.sim.base_rfr_logit_scale = 1.3;
    cfg.sim.zipf_exponent = 0.9;
    cfg.sim.cvr_rfr_weight_correlation = 0.75;
    cfg.windows.conversion = day_window(3);
    cfg.windows.refund = day_window(3);
    cfg.windows.conversion_steps = {day_window(1), day_window(2)};
    cfg.windows.refund_steps = {day_window(1), day_window(2)};
    // desk-scale optimizer adaptation: halving the batch doubles the step
    // count so the prediction level actually converges within one epoch,
    // and the warm accumulator keeps rarely-hit embedding rows from taking
    // full-learning-rate jumps all epoch long
    cfg.train.batch_size = 128;
    cfg.train.initial_accumulator = 1.0;
    return cfg;
  }

  double train_cutoff() const { return static_cast<double>(train_days); }
  double test_begin() const { return static_cast<double>(test_day - 1); }
  double test_end() const { return static_cast<double>(test_day); }

  std::uint64_t sim_seed() const {
    return sim_seed_overridden ? sim.seed : substream_seed(seed, "sim");
  }

  void validate() const {
    sim.validate();
    windows.validate();
    if (train.batch_size <= 0) throw ConfigError("train: batch_size must be positive");
    if (train.epochs <= 0) throw ConfigError("train: epochs must be positive");
    if (!(train.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (net.embedding_dim <= 0) throw ConfigError("net: embedding_dim must be positive");
    for (int w : net.bottom_layers)
      if (w <= 0) throw ConfigError("net: bottom layer widths must be positive");
    for (int w : net.tower_layers)
      if (w <= 0) throw ConfigError("net: tower layer widths must be positive");
    if (test_day <= train_days)
      throw ConfigError("experiment: test_day must be strictly after the training horizon");
    if (test_day > sim.horizon_days)
      throw ConfigError("experiment: test_day beyond the simulated horizon");
    if (shards < 2) throw ConfigError("experiment: needs at least 2 shards");
    if (variants.empty()) throw ConfigError("experiment: no variants listed");
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string tok;
  for (char c : s) {
    if (c == ',') {
      if (!trim(tok).empty()) out.push_back(trim(tok));
      tok.clear();
    } else {
      tok += c;
    }
  }
  if (!trim(tok).empty()) out.push_back(trim(tok));
  return out;
}

inline int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad unsigned integer for " + key + ": '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

inline std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& tok : split_list(v)) out.push_back(to_int(key, tok));
  return out;
}

inline Window to_window(const std::string& key, const std::string& granularity,
                        const std::string& v) {
  if (granularity == "day") return day_window(to_int(key, v));
  return continuous_window(to_double(key, v));
}

}  // namespace config_detail

// Parses the INI-style config text over the given defaults. Unknown sections
// or keys are configuration errors.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          ExperimentConfig cfg = ExperimentConfig{}) {
  namespace d = config_detail;
  std::istringstream is(text);
  std::string line, section;
  std::string granularity =
      cfg.windows.conversion.mode == Window::Mode::Day ? "day" : "continuous";
  std::vector<std::pair<std::string, std::string>> window_keys;  // applied after granularity
  std::size_t line_no = 0;

  while (std::getline(is, line)) {
    ++line_no;
    std::string t = d::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("config line " + std::to_string(line_no) +
                                             ": unterminated section");
      section = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = d::trim(t.substr(0, eq));
    const std::string val = d::trim(t.substr(eq + 1));
    const std::string full = section + "." + key;

    if (section == "sim") {
      if (key == "num_fields") cfg.sim.num_fields = d::to_int(full, val);
      else if (key == "cardinality_per_field") cfg.sim.cardinality_per_field = d::to_int(full, val);
      else if (key == "horizon_days") cfg.sim.horizon_days = d::to_int(full, val);
      else if (key == "clicks_per_day") cfg.sim.clicks_per_day = d::to_int(full, val);
      else if (key == "base_cvr_logit_scale") cfg.sim.base_cvr_logit_scale = d::to_double(full, val);
      else if (key == "base_rfr_logit_scale") cfg.sim.base_rfr_logit_scale = d::to_double(full, val);
      else if (key == "target_cvr") cfg.sim.target_cvr = d::to_double(full, val);
      else if (key == "target_rfr") cfg.sim.target_rfr = d::to_double(full, val);
      else if (key == "conversion_delay_mean_days") cfg.sim.conversion_delay_mean_days = d::to_double(full, val);
      else if (key == "refund_delay_mean_days") cfg.sim.refund_delay_mean_days = d::to_double(full, val);
      else if (key == "drift_rate") cfg.sim.drift_rate = d::to_double(full, val);
      else if (key == "zipf_exponent") cfg.sim.zipf_exponent = d::to_double(full, val);
      else if (key == "cvr_rfr_weight_correlation") cfg.sim.cvr_rfr_weight_correlation = d::to_double(full, val);
      else if (key == "seed") { cfg.sim.seed = d::to_u64(full, val); cfg.sim_seed_overridden = true; }
      else throw ConfigError("config: unknown key " + full);
    } else if (section == "windows") {
      if (key == "granularity") {
        if (val != "day" && val != "continuous")
          throw ConfigError("config: windows.granularity must be day or continuous");
        granularity = val;
      } else if (key == "conversion_window" || key == "refund_window" ||
                 key == "conversion_steps" || key == "refund_steps") {
        window_keys.emplace_back(key, val);
      } else {
        throw ConfigError("config: unknown key " + full);
      }
    } else if (section == "net") {
      if (key == "embedding_dim") cfg.net.embedding_dim = d::to_int(full, val);
      else if (key == "bottom_layers") cfg.net.bottom_layers = d::to_int_list(full, val);
      else if (key == "tower_layers") cfg.net.tower_layers = d::to_int_list(full, val);
      else if (key == "leaky_slope") cfg.net.leaky_slope = d::to_double(full, val);
      else throw ConfigError("config: unknown key " + full);
    } else if (section == "optimizer") {
      if (key == "learning_rate") cfg.train.learning_rate = d::to_double(full, val);
      else if (key == "accumulator_decay") cfg.train.accumulator_decay = d::to_double(full, val);
      else if (key == "epsilon") cfg.train.adagrad_epsilon = d::to_double(full, val);
      else if (key == "initial_accumulator") cfg.train.initial_accumulator = d::to_double(full, val);
      else throw ConfigError("config: unknown key " + full);
    } else if (section == "train") {
      if (key == "batch_size") cfg.train.batch_size = d::to_int(full, val);
      else if (key == "epochs") cfg.train.epochs = d::to_int(full, val);
      else if (key == "fake_negatives") cfg.fake_negatives = d::to_bool(full, val);
      else throw ConfigError("config: unknown key " + full);
    } else if (section == "experiment") {
      if (key == "variants") {
        cfg.variants.clear();
        for (const std::string& name : d::split_list(val))
          cfg.variants.push_back(parse_variant(name));
      } else if (key == "train_days") cfg.train_days = d::to_int(full, val);
      else if (key == "test_day") cfg.test_day = d::to_int(full, val);
      else if (key == "shards") cfg.shards = d::to_int(full, val);
      else if (key == "seed") cfg.seed = d::to_u64(full, val);
      else throw ConfigError("config: unknown key " + full);
    } else {
      throw ConfigError("config: unknown section [" + section + "]");
    }
  }

  for (const auto& [key, val] : window_keys) {
    const std::string full = "windows." + key;
    if (key == "conversion_window") cfg.windows.conversion = d::to_window(full, granularity, val);
    else if (key == "refund_window") cfg.windows.refund = d::to_window(full, granularity, val);
    else if (key == "conversion_steps") {
      cfg.windows.conversion_steps.clear();
      for (const std::string& tok : d::split_list(val))
        cfg.windows.conversion_steps.push_back(d::to_window(full, granularity, tok));
    } else {
      cfg.windows.refund_steps.clear();
      for (const std::string& tok : d::split_list(val))
        cfg.windows.refund_steps.push_back(d::to_window(full, granularity, tok));
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path,
                                    ExperimentConfig defaults = ExperimentConfig{}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), std::move(defaults));
}

// Effective configuration, echoed into reports and checkpoints.
inline std::string config_echo(const ExperimentConfig& cfg) {
  char buf[256];
  std::string out;
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out += buf;
    out += '\n';
  };
  const bool day = cfg.windows.conversion.mode == Window::Mode::Day;
  auto window_len = [&](const Window& w) {
    std::snprintf(buf, sizeof(buf), day ? "%.0f" : "%g", w.length);
    return std::string(buf);
  };
  auto window_list = [&](const std::vector<Window>& ws) {
    std::string s;
    for (std::size_t i = 0; i < ws.size(); ++i) s += (i ? "," : "") + window_len(ws[i]);
    return s;
  };

  out += "[sim]\n";
  line("num_fields = %d", cfg.sim.num_fields);
  line("cardinality_per_field = %d", cfg.sim.cardinality_per_field);
  line("horizon_days = %d", cfg.sim.horizon_days);
  line("clicks_per_day = %d", cfg.sim.clicks_per_day);
  line("base_cvr_logit_scale = %g", cfg.sim.base_cvr_logit_scale);
  line("base_rfr_logit_scale = %g", cfg.sim.base_rfr_logit_scale);
  line("target_cvr = %g", cfg.sim.target_cvr);
  line("target_rfr = %g", cfg.sim.target_rfr);
  line("conversion_delay_mean_days = %g", cfg.sim.conversion_delay_mean_days);
  line("refund_delay_mean_days = %g", cfg.sim.refund_delay_mean_days);
  line("drift_rate = %g", cfg.sim.drift_rate);
  line("zipf_exponent = %g", cfg.sim.zipf_exponent);
  line("cvr_rfr_weight_correlation = %g", cfg.sim.cvr_rfr_weight_correlation);
  if (cfg.sim_seed_overridden) line("seed = %llu", static_cast<unsigned long long>(cfg.sim.seed));
  out += "[windows]\n";
  line("granularity = %s", day ? "day" : "continuous");
  line("conversion_window = %s", window_len(cfg.windows.conversion).c_str());
  line("refund_window = %s", window_len(cfg.windows.refund).c_str());
  line("conversion_steps = %s", window_list(cfg.windows.conversion_steps).c_str());
  line("refund_steps = %s", window_list(cfg.windows.refund_steps).c_str());
  out += "[net]\n";
  line("embedding_dim = %d", cfg.net.embedding_dim);
  {
    std::string widths;
    for (std::size_t i = 0; i < cfg.net.bottom_layers.size(); ++i)
      widths += (i ? "," : "") + std::to_string(cfg.net.bottom_layers[i]);
    line("bottom_layers = %s", widths.c_str());
    widths.clear();
    for (std::size_t i = 0; i < cfg.net.tower_layers.size(); ++i)
      widths += (i ? "," : "") + std::to_string(cfg.net.tower_layers[i]);
    line("tower_layers = %s", widths.c_str());
  }
  line("leaky_slope = %g", cfg.net.leaky_slope);
  out += "[optimizer]\n";
  line("learning_rate = %g", cfg.train.learning_rate);
  line("accumulator_decay = %g", cfg.train.accumulator_decay);
  line("epsilon = %g", cfg.train.adagrad_epsilon);
  line("initial_accumulator = %g", cfg.train.initial_accumulator);
  out += "[train]\n";
  line("batch_size = %d", cfg.train.batch_size);
  line("epochs = %d", cfg.train.epochs);
  line("fake_negatives = %s", cfg.fake_negatives ? "true" : "false");
  out += "[experiment]\n";
  {
    std::string names;
    for (std::size_t i = 0; i < cfg.variants.size(); ++i)
      names += (i ? "," : "") + variant_name(cfg.variants[i]);
    line("variants = %s", names.c_str());
  }
  line("train_days = %d", cfg.train_days);
  line("test_day = %d", cfg.test_day);
  line("shards = %d", cfg.shards);
  line("seed = %llu", static_cast<unsigned long long>(cfg.seed));
  return out;
}

}  // namespace ecvr
