#pragma once

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ecvr/attribution.hpp"
#include "ecvr/errors.hpp"
#include "ecvr/sim.hpp"

namespace ecvr {

// Click-log text format, version 1.
//
//   #ecvr-events v1
//   #meta num_fields=<int> cardinality=<int> horizon_days=<int> seed=<u64>
//   <click_time> <w|inf> <v|inf> <field:index> <field:index> ...
//
// One record per line; click_time and the delays are printed with %.17g so
// doubles round-trip exactly. "inf" marks an event that never happens.
struct DatasetMeta {
  int num_fields = 0;
  int cardinality = 0;
  int horizon_days = 0;
  std::uint64_t seed = 0;
};

namespace io_detail {

inline constexpr std::string_view kEventsHeader = "#ecvr-events v1";
inline constexpr std::string_view kAttributedHeader = "#ecvr-attributed v1";

inline std::string format_double(double v) {
  if (std::isinf(v)) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view tok, std::size_t line_no, const char* what) {
  if (tok == "inf") return kInf;
  double v{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                    std::string(tok) + "'");
  return v;
}

inline long long parse_int(std::string_view tok, std::size_t line_no, const char* what) {
  long long v{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                    std::string(tok) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view tok, std::size_t line_no, const char* what) {
  std::uint64_t v{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                    std::string(tok) + "'");
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline Feature parse_feature(std::string_view tok, std::size_t line_no, const DatasetMeta& meta) {
  const auto colon = tok.find(':');
  if (colon == std::string_view::npos)
    throw DataError("line " + std::to_string(line_no) + ": bad feature '" + std::string(tok) +
                    "'");
  Feature f;
  f.field = static_cast<int>(parse_int(tok.substr(0, colon), line_no, "feature field"));
  f.index = static_cast<int>(parse_int(tok.substr(colon + 1), line_no, "feature index"));
  if (f.field < 0 || f.field >= meta.num_fields)
    throw DataError("line " + std::to_string(line_no) + ": field out of range");
  if (f.index < 0 || f.index >= meta.cardinality)
    throw DataError("line " + std::to_string(line_no) + ": index out of range");
  return f;
}

inline std::string meta_line(const DatasetMeta& meta) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "#meta num_fields=%d cardinality=%d horizon_days=%d seed=%" PRIu64,
                meta.num_fields, meta.cardinality, meta.horizon_days,
                static_cast<std::uint64_t>(meta.seed));
  return buf;
}

inline DatasetMeta parse_meta_line(const std::string& line, std::size_t line_no) {
  DatasetMeta meta;
  const auto toks = split_ws(line);
  if (toks.empty() || toks[0] != "#meta")
    throw DataError("line " + std::to_string(line_no) + ": expected #meta header");
  for (std::size_t k = 1; k < toks.size(); ++k) {
    const auto eq = toks[k].find('=');
    if (eq == std::string_view::npos)
      throw DataError("line " + std::to_string(line_no) + ": bad meta token");
    const std::string_view key = toks[k].substr(0, eq);
    const std::string_view val = toks[k].substr(eq + 1);
    if (key == "num_fields") meta.num_fields = static_cast<int>(parse_int(val, line_no, "meta"));
    else if (key == "cardinality") meta.cardinality = static_cast<int>(parse_int(val, line_no, "meta"));
    else if (key == "horizon_days") meta.horizon_days = static_cast<int>(parse_int(val, line_no, "meta"));
    else if (key == "seed") meta.seed = parse_u64(val, line_no, "meta");
    else throw DataError("line " + std::to_string(line_no) + ": unknown meta key");
  }
  if (meta.num_fields <= 0 || meta.cardinality <= 0)
    throw DataError("line " + std::to_string(line_no) + ": incomplete #meta header");
  return meta;
}

inline void write_event_fields(std::ostream& os, const ClickEvent& e) {
  os << format_double(e.click_time) << ' ' << format_double(e.conversion_delay) << ' '
     << format_double(e.refund_delay);
  for (const Feature& f : e.features) os << ' ' << f.field << ':' << f.index;
}

}  // namespace io_detail

inline void write_events(const std::string& path, const DatasetMeta& meta,
                         std::span<const ClickEvent> events) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  os << io_detail::kEventsHeader << '\n' << io_detail::meta_line(meta) << '\n';
  for (const ClickEvent& e : events) {
    io_detail::write_event_fields(os, e);
    os << '\n';
  }
  if (!os) throw DataError("write failed for '" + path + "'");
}

struct EventDataset {
  DatasetMeta meta;
  std::vector<ClickEvent> events;
};

inline EventDataset read_events(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read '" + path + "'");
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(is, line) || line != io_detail::kEventsHeader)
    throw DataError(path + ": not an event dataset (bad or missing version line)");
  ++line_no;
  if (!std::getline(is, line)) throw DataError(path + ": missing #meta line");
  ++line_no;
  EventDataset ds;
  ds.meta = io_detail::parse_meta_line(line, line_no);

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    const auto toks = io_detail::split_ws(line);
    if (toks.size() < 3 + static_cast<std::size_t>(ds.meta.num_fields))
      throw DataError("line " + std::to_string(line_no) + ": too few fields");
    ClickEvent e;
    e.click_time = io_detail::parse_double(toks[0], line_no, "click_time");
    e.conversion_delay = io_detail::parse_double(toks[1], line_no, "conversion delay");
    e.refund_delay = io_detail::parse_double(toks[2], line_no, "refund delay");
    if (!std::isfinite(e.click_time))
      throw DataError("line " + std::to_string(line_no) + ": non-finite click_time");
    if (!e.converts() && e.refunds())
      throw DataError("line " + std::to_string(line_no) + ": refund without conversion");
    for (std::size_t k = 3; k < toks.size(); ++k)
      e.features.push_back(io_detail::parse_feature(toks[k], line_no, ds.meta));
    if (e.features.size() != static_cast<std::size_t>(ds.meta.num_fields))
      throw DataError("line " + std::to_string(line_no) + ": wrong feature count");
    ds.events.push_back(std::move(e));
  }
  return ds;
}

}  // namespace ecvr
