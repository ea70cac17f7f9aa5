#pragma once

// DNN descriptors, partition points and per-partition contextual features.
//
// A descriptor is an ordered chain of units (a layer, or a residual block
// treated atomically). Partition point p in {0, ..., P} with P = #units runs
// units 1..p on the mobile device and ships the output of unit p (the raw
// input when p = 0) to the edge, which runs the remaining units.

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ans/detail/json_fields.hpp"
#include "ans/error.hpp"

namespace ans {

inline constexpr int kContextDim = 7;

/// x_p = [m_conv, m_fc, m_act, n_conv, n_fc, n_act, psi]: back-end GMACs per
/// layer type, back-end layer counts per type, and the MB shipped uplink.
using ContextVector = Eigen::Matrix<double, kContextDim, 1>;

enum Feature : int {
  kConvGmacs = 0,
  kFcGmacs = 1,
  kActGmacs = 2,
  kConvLayers = 3,
  kFcLayers = 4,
  kActLayers = 5,
  kPsiMb = 6,
};

inline constexpr std::array<std::string_view, kContextDim> kFeatureNames = {
    "m_conv", "m_fc", "m_act", "n_conv", "n_fc", "n_act", "psi_mb"};

enum class LayerKind { conv, fc, act, other };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::fc: return "fc";
    case LayerKind::act: return "act";
    case LayerKind::other: return "other";
  }
  return "other";
}

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::other;
  double gmacs = 0.0;      // 1e9 multiply-accumulates
  double output_mb = 0.0;  // tensor shipped if the chain is cut after this unit
};

struct DnnDescriptor {
  std::string name;
  double input_size_mb = 0.0;
  std::vector<LayerSpec> units;

  /// P, the index of pure on-device processing.
  int on_device_index() const { return static_cast<int>(units.size()); }
  int partition_count() const { return on_device_index() + 1; }

  double total_gmacs() const {
    double s = 0.0;
    for (const auto& u : units) s += u.gmacs;
    return s;
  }
};

/// Known front-end cost model of the mobile device.
struct DeviceProfile {
  double ms_per_gmac_conv = 0.0;
  double ms_per_gmac_fc = 0.0;
  double ms_per_gmac_act = 0.0;
  double fixed_overhead_ms = 0.0;

  /// Pooling and other bookkeeping layers run at the activation rate.
  double ms_per_gmac(LayerKind k) const {
    switch (k) {
      case LayerKind::conv: return ms_per_gmac_conv;
      case LayerKind::fc: return ms_per_gmac_fc;
      case LayerKind::act:
      case LayerKind::other: return ms_per_gmac_act;
    }
    return ms_per_gmac_act;
  }
};

// ---------------------------------------------------------------------------
// Parsing / validation

inline LayerKind parse_layer_kind(const std::string& s, const std::string& path) {
  if (s == "conv") return LayerKind::conv;
  if (s == "fc") return LayerKind::fc;
  if (s == "act") return LayerKind::act;
  if (s == "other") return LayerKind::other;
  throw SchemaError(path, "unknown layer kind '" + s + "' (expected conv|fc|act|other)");
}

inline void validate(const DnnDescriptor& desc) {
  if (desc.units.empty()) throw SchemaError("units", "no partition points");
  if (!(desc.input_size_mb >= 0.0) || !std::isfinite(desc.input_size_mb)) {
    throw SchemaError("input_size_mb", "must be a finite non-negative number");
  }
  for (std::size_t i = 0; i < desc.units.size(); ++i) {
    const auto& u = desc.units[i];
    const auto base = detail::index_path("units", i);
    if (!(u.gmacs >= 0.0) || !std::isfinite(u.gmacs)) {
      throw SchemaError(base + ".gmacs", "unit '" + u.name + "' has negative or non-finite gmacs");
    }
    if (!(u.output_mb >= 0.0) || !std::isfinite(u.output_mb)) {
      throw SchemaError(base + ".output_mb",
                        "unit '" + u.name + "' has negative or non-finite output_mb");
    }
  }
}

inline DnnDescriptor parse_descriptor(const nlohmann::json& doc) {
  using namespace detail;
  DnnDescriptor desc;
  desc.name = require_string(doc, "name", "");
  desc.input_size_mb = require_non_negative(doc, "input_size_mb", "");
  const json& units = require(doc, "units", "");
  if (!units.is_array()) throw SchemaError("units", "expected an array");
  if (units.empty()) throw SchemaError("units", "no partition points");
  desc.units.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto base = index_path("units", i);
    const json& u = units[i];
    LayerSpec spec;
    spec.name = require_string(u, "name", base);
    spec.kind = parse_layer_kind(require_string(u, "kind", base), join_path(base, "kind"));
    spec.gmacs = require_number(u, "gmacs", base);
    if (spec.gmacs < 0.0) {
      throw SchemaError(join_path(base, "gmacs"), "unit '" + spec.name + "' has negative gmacs");
    }
    spec.output_mb = require_number(u, "output_mb", base);
    if (spec.output_mb < 0.0) {
      throw SchemaError(join_path(base, "output_mb"),
                        "unit '" + spec.name + "' has negative output_mb");
    }
    desc.units.push_back(std::move(spec));
  }
  return desc;
}

inline DnnDescriptor parse_descriptor(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", std::string{"malformed descriptor: "} + e.what());
  }
  return parse_descriptor(doc);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DnnDescriptor load_descriptor(const std::filesystem::path& path) {
  try {
    return parse_descriptor(std::string_view{read_text_file(path)});
  } catch (const SchemaError& e) {
    throw SchemaError(e.path(), path.string() + ": " + e.what());
  }
}

inline nlohmann::json to_json(const DnnDescriptor& desc) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : desc.units) {
    units.push_back({{"name", u.name},
                     {"kind", std::string{to_string(u.kind)}},
                     {"gmacs", u.gmacs},
                     {"output_mb", u.output_mb}});
  }
  return {{"name", desc.name}, {"input_size_mb", desc.input_size_mb}, {"units", units}};
}

// ---------------------------------------------------------------------------
// Features

namespace detail {

inline void accumulate_unit(ContextVector& x, const LayerSpec& u) {
  switch (u.kind) {
    case LayerKind::conv:
      x[kConvGmacs] += u.gmacs;
      x[kConvLayers] += 1.0;
      break;
    case LayerKind::fc:
      x[kFcGmacs] += u.gmacs;
      x[kFcLayers] += 1.0;
      break;
    case LayerKind::act:
      x[kActGmacs] += u.gmacs;
      x[kActLayers] += 1.0;
      break;
    case LayerKind::other:
      // MACs fold into the activation bucket; no layer count.
      x[kActGmacs] += u.gmacs;
      break;
  }
}

inline double shipped_mb(const DnnDescriptor& desc, int p) {
  if (p == 0) return desc.input_size_mb;
  if (p == desc.on_device_index()) return 0.0;
  return desc.units[static_cast<std::size_t>(p - 1)].output_mb;
}

inline void check_partition(const DnnDescriptor& desc, int p) {
  if (p < 0 || p > desc.on_device_index()) {
    throw std::out_of_range("partition index " + std::to_string(p) + " outside [0, " +
                            std::to_string(desc.on_device_index()) + "]");
  }
}

}  // namespace detail

/// Context of partition p: aggregates over the units strictly after p.
inline ContextVector build_context(const DnnDescriptor& desc, int p) {
  detail::check_partition(desc, p);
  ContextVector x = ContextVector::Zero();
  for (std::size_t i = static_cast<std::size_t>(p); i < desc.units.size(); ++i) {
    detail::accumulate_unit(x, desc.units[i]);
  }
  x[kPsiMb] = detail::shipped_mb(desc, p);
  return x;
}

/// All P+1 contexts, built by a single backward sweep.
inline std::vector<ContextVector> context_table(const DnnDescriptor& desc) {
  const int P = desc.on_device_index();
  std::vector<ContextVector> table(static_cast<std::size_t>(P + 1), ContextVector::Zero());
  ContextVector suffix = ContextVector::Zero();
  for (int p = P; p >= 0; --p) {
    if (p < P) detail::accumulate_unit(suffix, desc.units[static_cast<std::size_t>(p)]);
    table[static_cast<std::size_t>(p)] = suffix;
    table[static_cast<std::size_t>(p)][kPsiMb] = detail::shipped_mb(desc, p);
  }
  return table;
}

/// d_f(p) in ms: device time of units 1..p plus the fixed per-inference
/// overhead whenever anything runs locally.
inline std::vector<double> frontend_profile(const DnnDescriptor& desc, const DeviceProfile& device) {
  std::vector<double> df(desc.units.size() + 1, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < desc.units.size(); ++i) {
    acc += desc.units[i].gmacs * device.ms_per_gmac(desc.units[i].kind);
    df[i + 1] = device.fixed_overhead_ms + acc;
  }
  return df;
}

/// Component-wise scaling to the unit box: each feature is divided by its
/// maximum over the table (columns that are identically zero are left as is).
struct FeatureScale {
  ContextVector scale = ContextVector::Ones();

  ContextVector normalize(const ContextVector& raw) const { return raw.cwiseQuotient(scale); }
  /// Coefficients acting on raw features, re-expressed on normalized ones.
  ContextVector to_normalized_coefficients(const ContextVector& raw_theta) const {
    return raw_theta.cwiseProduct(scale);
  }
  ContextVector to_raw_coefficients(const ContextVector& normalized_theta) const {
    return normalized_theta.cwiseQuotient(scale);
  }
};

inline FeatureScale feature_scale(const std::vector<ContextVector>& table) {
  FeatureScale fs;
  for (int j = 0; j < kContextDim; ++j) {
    double m = 0.0;
    for (const auto& x : table) m = std::max(m, x[j]);
    fs.scale[j] = m > 0.0 ? m : 1.0;
  }
  return fs;
}

inline std::vector<ContextVector> normalize_table(const std::vector<ContextVector>& table,
                                                  const FeatureScale& fs) {
  std::vector<ContextVector> out;
  out.reserve(table.size());
  for (const auto& x : table) out.push_back(fs.normalize(x));
  return out;
}

}  // namespace ans
