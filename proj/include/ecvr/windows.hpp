#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ecvr/errors.hpp"

namespace ecvr {

// An attribution window. Two conventions:
//  - Day: a k-day window closes at the end of the (trigger day + k - 1)-th
//    calendar day, i.e. deadline = floor(trigger) + k. Matches log-style
//    day arithmetic where a day-1 click's 3-day label closes at end of day 3.
//  - Continuous: closes exactly `length` days after the trigger.
// An event with delay d from its trigger is inside the window iff
// trigger + d < deadline(trigger); the comparison is strict.
struct Window {
  enum class Mode { Day, Continuous };

  Mode mode = Mode::Day;
  double length = 3.0;  // whole days when Mode::Day

  double deadline(double trigger) const {
    return mode == Mode::Day ? std::floor(trigger) + length : trigger + length;
  }

  bool contains(double trigger, double delay) const {
    return trigger + delay < deadline(trigger);
  }

  void validate() const {
    if (!(length > 0.0)) throw ConfigError("window length must be positive");
    if (mode == Mode::Day && length != std::floor(length))
      throw ConfigError("day-granular window length must be a whole number of days");
  }
};

inline Window day_window(int days) {
  Window w{Window::Mode::Day, static_cast<double>(days)};
  w.validate();
  return w;
}

inline Window continuous_window(double days) {
  Window w{Window::Mode::Continuous, days};
  w.validate();
  return w;
}

// Full attribution windows W (conversion) and V (refund) plus the ascending
// intermediate windows W_1..W_n and V_1..V_m used by the delayed heads.
struct WindowConfig {
  Window conversion;               // W
  Window refund;                   // V
  std::vector<Window> conversion_steps;  // W_1..W_n, each < W
  std::vector<Window> refund_steps;      // V_1..V_m, each < V

  int n() const { return static_cast<int>(conversion_steps.size()); }
  int m() const { return static_cast<int>(refund_steps.size()); }

  void validate() const {
    conversion.validate();
    refund.validate();
    auto check_steps = [](const std::vector<Window>& steps, const Window& full,
                          const char* what) {
      double prev = 0.0;
      for (const Window& w : steps) {
        w.validate();
        if (w.mode != full.mode) throw ConfigError(std::string(what) + ": mixed window modes");
        if (!(w.length > prev)) throw ConfigError(std::string(what) + ": steps must ascend");
        if (!(w.length < full.length))
          throw ConfigError(std::string(what) + ": steps must be shorter than the full window");
        prev = w.length;
      }
    };
    if (refund.mode != conversion.mode) throw ConfigError("windows: mixed window modes");
    check_steps(conversion_steps, conversion, "conversion windows");
    check_steps(refund_steps, refund, "refund windows");
  }

  // Latest time at which the full cascade label (conversion + refund) of a
  // click can still be open: the refund window measured from the last
  // possible in-window conversion.
  double cascade_deadline(double click_time) const {
    if (conversion.mode == Window::Mode::Day) {
      // last in-window conversion lies strictly before the conversion
      // deadline, i.e. on calendar day (deadline - 1)
      return std::floor(click_time) + conversion.length - 1.0 + refund.length;
    }
    return click_time + conversion.length + refund.length;
  }
};

// Compact text form used in checkpoint headers and attributed-dataset files:
//   <W>;<V>;<W_1>,..,<W_n>,;<V_1>,..,<V_m>,
// with each window as day:<len> or cont:<len>.
inline std::string window_token(const Window& w) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s:%.17g",
                w.mode == Window::Mode::Day ? "day" : "cont", w.length);
  return buf;
}

inline Window parse_window_token(const std::string& tok) {
  const auto colon = tok.find(':');
  if (colon == std::string::npos) throw ConfigError("bad window token '" + tok + "'");
  const std::string mode = tok.substr(0, colon);
  Window w;
  w.length = std::stod(tok.substr(colon + 1));
  if (mode == "day") w.mode = Window::Mode::Day;
  else if (mode == "cont") w.mode = Window::Mode::Continuous;
  else throw ConfigError("bad window mode '" + mode + "'");
  w.validate();
  return w;
}

inline std::string window_spec(const WindowConfig& wc) {
  std::string s = window_token(wc.conversion) + ";" + window_token(wc.refund) + ";";
  for (const Window& w : wc.conversion_steps) s += window_token(w) + ",";
  s += ";";
  for (const Window& w : wc.refund_steps) s += window_token(w) + ",";
  return s;
}

inline WindowConfig parse_window_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : spec) {
    if (c == ';') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 4) throw ConfigError("bad window spec '" + spec + "'");
  auto list = [](const std::string& s) {
    std::vector<Window> out;
    std::string tok;
    for (char c : s) {
      if (c == ',') {
        if (!tok.empty()) out.push_back(parse_window_token(tok));
        tok.clear();
      } else {
        tok += c;
      }
    }
    if (!tok.empty()) out.push_back(parse_window_token(tok));
    return out;
  };
  WindowConfig wc;
  wc.conversion = parse_window_token(parts[0]);
  wc.refund = parse_window_token(parts[1]);
  wc.conversion_steps = list(parts[2]);
  wc.refund_steps = list(parts[3]);
  wc.validate();
  return wc;
}

}  // namespace ecvr
