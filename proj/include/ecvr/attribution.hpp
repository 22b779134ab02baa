#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ecvr/errors.hpp"
#include "ecvr/nn.hpp"
#include "ecvr/windows.hpp"

namespace ecvr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One clicked sample with its latent follow-up delays. conversion_delay is
// measured from the click, refund_delay from the conversion; +inf means the
// event never happens. refund_delay is +inf whenever conversion_delay is.
struct ClickEvent {
  std::vector<Feature> features;
  double click_time = 0.0;
  double conversion_delay = kInf;
  double refund_delay = kInf;

  bool converts() const { return std::isfinite(conversion_delay); }
  bool refunds() const { return std::isfinite(refund_delay); }
  double conversion_time() const { return click_time + conversion_delay; }
  double refund_time() const { return conversion_time() + refund_delay; }
};

// Fixed order of label slots inside the value/mask bitfields:
//   y, z, y_eff, y_1..y_n, z_1..z_m, y&z, y&z_1..y&z_m, y_1&z..y_n&z,
//   y_i&z_j row-major (i outer).
// z-side labels are conditional on the conversion (their window is measured
// from the conversion time).
struct LabelLayout {
  int n = 0;
  int m = 0;

  LabelLayout() = default;
  LabelLayout(int n_, int m_) : n(n_), m(m_) {
    if (n < 0 || m < 0 || total() > 64)
      throw ConfigError("label layout: too many window steps for a 64-bit bitfield");
  }

  int slot_y() const { return 0; }
  int slot_z() const { return 1; }
  int slot_effective() const { return 2; }
  int slot_yw(int i) const { return 3 + i; }
  int slot_zw(int j) const { return 3 + n + j; }
  int slot_yz() const { return 3 + n + m; }
  int slot_y_zw(int j) const { return 4 + n + m + j; }
  int slot_yw_z(int i) const { return 4 + n + 2 * m + i; }
  int slot_yw_zw(int i, int j) const { return 4 + 2 * n + 2 * m + i * m + j; }
  int total() const { return 4 + 2 * n + 2 * m + n * m; }
};

// An attributed sample: the raw event plus per-slot label values and
// determinedness masks at some cutoff. Where mask = 0 the label value is
// meaningless and must not influence any loss.
struct LabeledSample {
  ClickEvent event;
  std::uint64_t label_bits = 0;
  std::uint64_t mask_bits = 0;

  bool determined(int slot) const { return (mask_bits >> slot) & 1U; }
  bool value(int slot) const { return (label_bits >> slot) & 1U; }
  double label(int slot) const { return static_cast<double>((label_bits >> slot) & 1U); }

  void set(int slot, bool val, bool det) {
    const std::uint64_t bit = 1ULL << slot;
    label_bits = val ? (label_bits | bit) : (label_bits & ~bit);
    mask_bits = det ? (mask_bits | bit) : (mask_bits & ~bit);
  }

  void flip_label(int slot) { label_bits ^= 1ULL << slot; }
};

namespace detail {

struct SlotState {
  bool value = false;
  bool determined = false;
};

// A windowed label resolves when its window has fully elapsed, for positives
// and negatives alike. Resolving positives early (at the event) would leave
// the freshest training days with positive-only observed labels, which
// inverts every model trained on them; keeping determination outcome-blind
// makes the observed labels unbiased at any cutoff.
inline SlotState attribute_window(const Window& w, double trigger, double event_time,
                                  double cutoff) {
  SlotState s;
  const double deadline = w.deadline(trigger);
  s.value = event_time < deadline;
  s.determined = deadline <= cutoff;
  return s;
}

// Conditional label: resolved to 0 by a determined-0 condition, passed
// through once the condition is determined-1, open otherwise.
inline SlotState gate_on(const SlotState& condition, const SlotState& raw) {
  SlotState s;
  if (condition.determined && !condition.value) {
    s.value = false;
    s.determined = true;
  } else if (condition.determined && condition.value) {
    s = raw;
  }
  return s;
}

// y_a & z_b is pinned to 0 as soon as y_a is determined-0; otherwise it needs
// y_a determined-1 and z_b determined.
inline SlotState combine_and(const SlotState& ya, const SlotState& zb) {
  SlotState s;
  if (ya.determined && !ya.value) {
    s.value = false;
    s.determined = true;
  } else if (ya.determined && ya.value && zb.determined) {
    s.value = zb.value;
    s.determined = true;
  }
  return s;
}

// Effective conversion: y & !z with the same determination rule.
inline SlotState combine_effective(const SlotState& y, const SlotState& z) {
  SlotState s;
  if (y.determined && !y.value) {
    s.value = false;
    s.determined = true;
  } else if (y.determined && y.value && z.determined) {
    s.value = !z.value;
    s.determined = true;
  }
  return s;
}

}  // namespace detail

// Labels an event as observed at `cutoff`. Infinite delays flow through the
// window arithmetic, so cutoff = +inf yields fully determined ground-truth
// labels.
inline LabeledSample attribute(const ClickEvent& event, double cutoff, const WindowConfig& wc) {
  if (!(event.click_time <= cutoff)) throw DataError("attribute: click after cutoff");

  const LabelLayout layout(wc.n(), wc.m());
  LabeledSample out;
  out.event = event;

  const double conv_time = event.conversion_time();
  const double refund_time = event.refund_time();

  const auto y = detail::attribute_window(wc.conversion, event.click_time, conv_time, cutoff);
  // refund windows are measured from the conversion; the raw states feed the
  // combined labels, while the stored z slot is conditional on y so that a
  // determined-1 z always sits on a determined-1 y
  const auto z_raw = detail::attribute_window(wc.refund, conv_time, refund_time, cutoff);
  const auto z = detail::gate_on(y, z_raw);
  out.set(layout.slot_y(), y.value, y.determined);
  out.set(layout.slot_z(), z.value, z.determined);
  out.set(layout.slot_effective(), detail::combine_effective(y, z_raw).value,
          detail::combine_effective(y, z_raw).determined);
  out.set(layout.slot_yz(), detail::combine_and(y, z_raw).value,
          detail::combine_and(y, z_raw).determined);

  std::vector<detail::SlotState> yw(wc.n()), zw_raw(wc.m());
  for (int i = 0; i < wc.n(); ++i) {
    yw[i] = detail::attribute_window(wc.conversion_steps[i], event.click_time, conv_time, cutoff);
    out.set(layout.slot_yw(i), yw[i].value, yw[i].determined);
  }
  for (int j = 0; j < wc.m(); ++j) {
    zw_raw[j] = detail::attribute_window(wc.refund_steps[j], conv_time, refund_time, cutoff);
    const auto zj = detail::gate_on(y, zw_raw[j]);
    out.set(layout.slot_zw(j), zj.value, zj.determined);
  }
  for (int j = 0; j < wc.m(); ++j) {
    const auto c = detail::combine_and(y, zw_raw[j]);
    out.set(layout.slot_y_zw(j), c.value, c.determined);
  }
  for (int i = 0; i < wc.n(); ++i) {
    const auto c = detail::combine_and(yw[i], z_raw);
    out.set(layout.slot_yw_z(i), c.value, c.determined);
  }
  for (int i = 0; i < wc.n(); ++i) {
    for (int j = 0; j < wc.m(); ++j) {
      const auto c = detail::combine_and(yw[i], zw_raw[j]);
      out.set(layout.slot_yw_zw(i, j), c.value, c.determined);
    }
  }
  return out;
}

// Replaces every undetermined label with an observed negative. This is the
// fake-negative failure mode the masking protocol exists to prevent; kept as
// a switch so its cost can be measured.
inline LabeledSample to_fake_negative(LabeledSample s, const LabelLayout& layout) {
  for (int slot = 0; slot < layout.total(); ++slot) {
    if (!s.determined(slot)) s.set(slot, false, true);
  }
  return s;
}

}  // namespace ecvr
