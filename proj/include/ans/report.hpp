#pragma once

// CSV and JSON output for traces and summaries. Numbers are written with
// 17 significant digits so a write/parse cycle is lossless.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ans/error.hpp"
#include "ans/harness.hpp"

namespace ans {

inline constexpr const char* kTraceColumns =
    "t,is_key,weight,forced,partition,d_f_ms,predicted_de_ms,observed_de_ms,expected_de_ms,"
    "oracle_partition,oracle_total_ms,regret_ms";

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double_field(const std::string& s, const std::string& path) {
  if (s.empty()) return std::nan("");
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(path, "not a number: '" + s + "'");
  }
}

inline long long parse_int_field(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(path, "not an integer: '" + s + "'");
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_trace_csv(const Trace& tr, std::ostream& out) {
  using detail::fmt_double;
  out << kTraceColumns << '\n';
  for (const auto& r : tr.records) {
    out << r.t << ',' << (r.is_key ? 1 : 0) << ',' << fmt_double(r.weight) << ',' << (r.forced ? 1 : 0) << ','
        << r.partition << ',' << fmt_double(r.d_f) << ',' << fmt_double(r.predicted_de) << ','
        << (r.observed_de ? fmt_double(*r.observed_de) : std::string{}) << ',' << fmt_double(r.expected_de) << ','
        << r.oracle_partition << ',' << fmt_double(r.oracle_total) << ',' << fmt_double(r.regret) << '\n';
  }
}

inline void write_trace_csv(const Trace& tr, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trace_csv(tr, out);
}

/// Parses the records of a trace CSV produced by write_trace_csv.
inline std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  using namespace detail;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("trace", "empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceColumns) throw SchemaError("trace.header", "unexpected columns");
  std::vector<TraceRecord> out;
  for (std::size_t row = 1; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string base = "trace[" + std::to_string(row) + "]";
    if (f.size() != 12) throw SchemaError(base, "expected 12 fields");
    TraceRecord r;
    r.t = static_cast<int>(parse_int_field(f[0], base + ".t"));
    r.is_key = parse_int_field(f[1], base + ".is_key") != 0;
    r.weight = parse_double_field(f[2], base + ".weight");
    r.forced = parse_int_field(f[3], base + ".forced") != 0;
    r.partition = static_cast<int>(parse_int_field(f[4], base + ".partition"));
    r.d_f = parse_double_field(f[5], base + ".d_f_ms");
    r.predicted_de = parse_double_field(f[6], base + ".predicted_de_ms");
    if (!f[7].empty()) r.observed_de = parse_double_field(f[7], base + ".observed_de_ms");
    r.expected_de = parse_double_field(f[8], base + ".expected_de_ms");
    r.oracle_partition = static_cast<int>(parse_int_field(f[9], base + ".oracle_partition"));
    r.oracle_total = parse_double_field(f[10], base + ".oracle_total_ms");
    r.regret = parse_double_field(f[11], base + ".regret_ms");
    out.push_back(r);
  }
  return out;
}

namespace detail {
inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
}  // namespace detail

inline nlohmann::json to_json(const MetricsSummary& m) {
  using detail::number_or_null;
  nlohmann::json adapt = nlohmann::json::array();
  for (const auto& a : m.adaptation) {
    adapt.push_back({{"change_frame", a.change_frame},
                     {"frames", a.frames ? nlohmann::json(*a.frames) : nlohmann::json(nullptr)}});
  }
  return {
      {"policy", to_string(m.policy)},
      {"seed", m.seed},
      {"horizon", m.horizon},
      {"total_regret_ms", m.total_regret},
      {"incumbent_regret_ms", m.incumbent_regret},
      {"regret_curve_ms", m.regret_curve},
      {"mape_percent", number_or_null(m.mape)},
      {"average_delay_ms",
       {{"overall", number_or_null(m.delay.overall)},
        {"key", number_or_null(m.delay.key)},
        {"non_key", number_or_null(m.delay.non_key)}}},
      {"adaptation", adapt},
      {"decision_time_us",
       {{"mean", m.decision.mean_us}, {"p50", m.decision.p50_us}, {"p99", m.decision.p99_us},
        {"max", m.decision.max_us}}},
      {"forced_frames", m.forced_frames},
      {"on_device_frames", m.on_device_frames},
  };
}

}  // namespace ans
