#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ecvr/attribution.hpp"
#include "ecvr/event_io.hpp"
#include "ecvr/windows.hpp"

namespace ecvr {

// Attributed dataset text format, version 1. Extends the event record with
// the label/mask bitfields (hex, slot order as in LabelLayout) and records
// the window config and cutoff used:
//
//   #ecvr-attributed v1
//   #meta num_fields=... cardinality=... horizon_days=... seed=...
//   #windows <W>;<V>;<W_1>,..,<W_n>,;<V_1>,..,<V_m>,
//   #cutoff <days|inf>
//   <click_time> <w|inf> <v|inf> <labels_hex> <mask_hex> <field:index> ...
struct AttributedDataset {
  DatasetMeta meta;
  WindowConfig windows;
  double cutoff = kInf;
  std::vector<LabeledSample> samples;

  LabelLayout layout() const { return LabelLayout(windows.n(), windows.m()); }
};

inline void write_attributed(const std::string& path, const AttributedDataset& ds) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  os << io_detail::kAttributedHeader << '\n'
     << io_detail::meta_line(ds.meta) << '\n'
     << "#windows " << window_spec(ds.windows) << '\n'
     << "#cutoff " << io_detail::format_double(ds.cutoff) << '\n';
  char hexbuf[40];
  for (const LabeledSample& s : ds.samples) {
    os << io_detail::format_double(s.event.click_time) << ' '
       << io_detail::format_double(s.event.conversion_delay) << ' '
       << io_detail::format_double(s.event.refund_delay);
    std::snprintf(hexbuf, sizeof(hexbuf), " %llx %llx",
                  static_cast<unsigned long long>(s.label_bits),
                  static_cast<unsigned long long>(s.mask_bits));
    os << hexbuf;
    for (const Feature& f : s.event.features) os << ' ' << f.field << ':' << f.index;
    os << '\n';
  }
  if (!os) throw DataError("write failed for '" + path + "'");
}

inline AttributedDataset read_attributed(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read '" + path + "'");
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(is, line) || line != io_detail::kAttributedHeader)
    throw DataError(path + ": not an attributed dataset (bad or missing version line)");
  ++line_no;
  if (!std::getline(is, line)) throw DataError(path + ": missing #meta line");
  ++line_no;
  AttributedDataset ds;
  ds.meta = io_detail::parse_meta_line(line, line_no);

  if (!std::getline(is, line) || line.rfind("#windows ", 0) != 0)
    throw DataError(path + ": missing #windows line");
  ++line_no;
  ds.windows = parse_window_spec(line.substr(9));
  if (!std::getline(is, line) || line.rfind("#cutoff ", 0) != 0)
    throw DataError(path + ": missing #cutoff line");
  ++line_no;
  ds.cutoff = io_detail::parse_double(std::string_view(line).substr(8), line_no, "cutoff");

  const LabelLayout layout = ds.layout();
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto toks = io_detail::split_ws(line);
    if (toks.size() != 5 + static_cast<std::size_t>(ds.meta.num_fields))
      throw DataError("line " + std::to_string(line_no) + ": wrong field count");
    LabeledSample s;
    s.event.click_time = io_detail::parse_double(toks[0], line_no, "click_time");
    s.event.conversion_delay = io_detail::parse_double(toks[1], line_no, "conversion delay");
    s.event.refund_delay = io_detail::parse_double(toks[2], line_no, "refund delay");
    auto parse_hex = [&](std::string_view tok, const char* what) {
      std::uint64_t v{};
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, 16);
      if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw DataError("line " + std::to_string(line_no) + ": bad " + what);
      return v;
    };
    s.label_bits = parse_hex(toks[3], "label bits");
    s.mask_bits = parse_hex(toks[4], "mask bits");
    if (layout.total() < 64 && (s.mask_bits >> layout.total()) != 0)
      throw DataError("line " + std::to_string(line_no) + ": mask bits beyond layout");
    for (std::size_t k = 5; k < toks.size(); ++k)
      s.event.features.push_back(io_detail::parse_feature(toks[k], line_no, ds.meta));
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Attributes a span of events at a cutoff (clicks after the cutoff are
// skipped, not errors: a cutoff simply has not seen them yet).
inline AttributedDataset attribute_all(std::span<const ClickEvent> events, double cutoff,
                                       const WindowConfig& wc, const DatasetMeta& meta) {
  wc.validate();
  AttributedDataset ds;
  ds.meta = meta;
  ds.windows = wc;
  ds.cutoff = cutoff;
  ds.samples.reserve(events.size());
  for (const ClickEvent& e : events) {
    if (e.click_time > cutoff) continue;
    ds.samples.push_back(attribute(e, cutoff, wc));
  }
  return ds;
}

}  // namespace ecvr
