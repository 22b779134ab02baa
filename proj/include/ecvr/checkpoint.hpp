#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ecvr/errors.hpp"
#include "ecvr/model.hpp"

namespace ecvr {

// Binary checkpoint, version 1. Layout:
//   magic "ECVRCKP1", u32 version,
//   str variant, str config echo, str window spec,
//   u32 num_fields, u32 cardinality, u32 embedding_dim,
//   u32 bottom layer count + widths, u32 tower layer count + widths,
//   f64 leaky_slope,
//   u32 bundle count, per bundle: str role tag, str arch,
//     u64 param count, per param: str name, u32 ndim, u64 dims...,
//     u64 value count, raw little-endian f64 values.
// Strings are u64 length + bytes. Round-trips are bit-exact.
namespace ckpt_detail {

inline constexpr char kMagic[8] = {'E', 'C', 'V', 'R', 'C', 'K', 'P', '1'};
inline constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t bits{};
  std::memcpy(&bits, &d, 8);
  put_u64(os, bits);
}

inline void put_str(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double d{};
  std::memcpy(&d, &bits, 8);
  return d;
}

inline std::string get_str(std::istream& is) {
  const std::uint64_t len = get_u64(is);
  if (len > (1ULL << 30)) throw DataError("checkpoint: implausible string length");
  std::string s(len, '\0');
  if (len && !is.read(s.data(), static_cast<std::streamsize>(len)))
    throw DataError("checkpoint: truncated string");
  return s;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const TrainedModel& model, const std::string& config_echo,
                            const std::string& path) {
  namespace d = ckpt_detail;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot write '" + path + "'");
  os.write(d::kMagic, 8);
  d::put_u32(os, d::kVersion);
  d::put_str(os, variant_name(model.variant));
  d::put_str(os, config_echo);
  d::put_str(os, window_spec(model.windows));
  d::put_u32(os, static_cast<std::uint32_t>(model.num_fields));
  d::put_u32(os, static_cast<std::uint32_t>(model.cardinality));
  d::put_u32(os, static_cast<std::uint32_t>(model.sizes.embedding_dim));
  d::put_u32(os, static_cast<std::uint32_t>(model.sizes.bottom_layers.size()));
  for (int w : model.sizes.bottom_layers) d::put_u32(os, static_cast<std::uint32_t>(w));
  d::put_u32(os, static_cast<std::uint32_t>(model.sizes.tower_layers.size()));
  for (int w : model.sizes.tower_layers) d::put_u32(os, static_cast<std::uint32_t>(w));
  d::put_f64(os, model.sizes.leaky_slope);
  d::put_u32(os, static_cast<std::uint32_t>(model.bundles.size()));
  for (const ModelBundle& b : model.bundles) {
    d::put_str(os, b.role_tag);
    d::put_str(os, arch_name(b.arch));
    auto params = const_cast<ModelBundle&>(b).params();
    d::put_u64(os, params.size());
    for (const ParamTensor* p : params) {
      d::put_str(os, p->name);
      d::put_u32(os, static_cast<std::uint32_t>(p->shape.size()));
      for (int dim : p->shape) d::put_u64(os, static_cast<std::uint64_t>(dim));
      d::put_u64(os, p->values.size());
      for (double v : p->values) d::put_f64(os, v);
    }
  }
  if (!os) throw DataError("checkpoint: write failed for '" + path + "'");
}

struct LoadedCheckpoint {
  TrainedModel model;
  std::string config_echo;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  namespace d = ckpt_detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot read '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, d::kMagic, 8) != 0)
    throw DataError("checkpoint: bad magic in '" + path + "'");
  if (d::get_u32(is) != d::kVersion) throw DataError("checkpoint: unsupported version");

  LoadedCheckpoint out;
  const std::string variant = d::get_str(is);
  out.config_echo = d::get_str(is);
  const WindowConfig wc = parse_window_spec(d::get_str(is));
  const int num_fields = static_cast<int>(d::get_u32(is));
  const int cardinality = static_cast<int>(d::get_u32(is));
  NetSizes sizes;
  sizes.embedding_dim = static_cast<int>(d::get_u32(is));
  sizes.bottom_layers.resize(d::get_u32(is));
  for (int& w : sizes.bottom_layers) w = static_cast<int>(d::get_u32(is));
  sizes.tower_layers.resize(d::get_u32(is));
  for (int& w : sizes.tower_layers) w = static_cast<int>(d::get_u32(is));
  sizes.leaky_slope = d::get_f64(is);

  out.model = build_model(parse_variant(variant), wc, sizes, num_fields, cardinality, /*seed=*/0);

  const std::uint32_t bundle_count = d::get_u32(is);
  if (bundle_count != out.model.bundles.size())
    throw DataError("checkpoint: bundle count mismatch");
  for (std::uint32_t bi = 0; bi < bundle_count; ++bi) {
    ModelBundle& b = out.model.bundles[bi];
    const std::string tag = d::get_str(is);
    const std::string arch = d::get_str(is);
    if (tag != b.role_tag || arch != arch_name(b.arch))
      throw DataError("checkpoint: bundle layout mismatch");
    auto params = b.params();
    const std::uint64_t count = d::get_u64(is);
    if (count != params.size()) throw DataError("checkpoint: parameter count mismatch");
    for (ParamTensor* p : params) {
      const std::string name = d::get_str(is);
      if (name != p->name) throw DataError("checkpoint: parameter name mismatch: " + name);
      std::vector<int> shape(d::get_u32(is));
      for (int& dim : shape) dim = static_cast<int>(d::get_u64(is));
      if (shape != p->shape) throw DataError("checkpoint: shape mismatch for " + name);
      const std::uint64_t n = d::get_u64(is);
      if (n != p->values.size()) throw DataError("checkpoint: value count mismatch for " + name);
      for (double& v : p->values) v = d::get_f64(is);
    }
  }
  return out;
}

}  // namespace ecvr
