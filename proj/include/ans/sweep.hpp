#pragma once

// Parameter sweeps: the Cartesian product of parameter grids, each point run
// over a block of seeds. Jobs are independent and execute on a small thread
// pool; results come back in job order regardless of completion order.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ans/harness.hpp"
#include "ans/report.hpp"
#include "ans/scenario.hpp"

namespace ans {

struct ParameterAxis {
  std::string name;
  std::vector<double> values;
};

using GridPoint = std::vector<std::pair<std::string, double>>;

struct SweepRow {
  GridPoint point;
  std::uint64_t seed = 0;
  MetricsSummary metrics;
};

struct SweepResult {
  std::vector<std::string> parameters;
  std::vector<SweepRow> rows;          // one per (grid point, seed)
  std::vector<GridPoint> points;       // grid points in enumeration order
};

inline std::vector<GridPoint> expand_grid(const std::vector<ParameterAxis>& axes) {
  std::vector<GridPoint> out{GridPoint{}};
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw SchemaError(axis.name, "empty parameter grid");
    std::vector<GridPoint> next;
    for (const auto& gp : out) {
      for (double v : axis.values) {
        GridPoint g = gp;
        g.emplace_back(axis.name, v);
        next.push_back(std::move(g));
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Parses "name=v1,v2,..." into an axis.
inline ParameterAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw SchemaError(spec, "expected name=v1,v2,...");
  ParameterAxis axis;
  axis.name = spec.substr(0, eq);
  std::string rest = spec.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const auto tok = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw SchemaError(axis.name, "empty value in grid");
    axis.values.push_back(detail::parse_double_field(tok, axis.name));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return axis;
}

/// Runs every (grid point, seed) job; seeds are base_seed .. base_seed+seeds-1.
inline SweepResult sweep(const Scenario& base, const std::vector<ParameterAxis>& axes, int seeds,
                         std::uint64_t base_seed, unsigned threads = std::thread::hardware_concurrency()) {
  if (seeds < 1) throw SchemaError("seeds", "must be >= 1");
  SweepResult result;
  for (const auto& a : axes) result.parameters.push_back(a.name);
  result.points = expand_grid(axes);

  std::vector<Scenario> scenarios;
  std::vector<PreparedScenario> prepared;
  for (const auto& gp : result.points) {
    Scenario sc = base;
    for (const auto& [name, value] : gp) apply_parameter(sc, name, value);
    prepared.push_back(prepare(sc));
    scenarios.push_back(std::move(sc));
  }

  const std::size_t jobs = result.points.size() * static_cast<std::size_t>(seeds);
  result.rows.resize(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t g = j / static_cast<std::size_t>(seeds);
      const std::uint64_t seed = base_seed + j % static_cast<std::size_t>(seeds);
      SweepRow row;
      row.point = result.points[g];
      row.seed = seed;
      row.metrics = summarize(run(scenarios[g], seed, prepared[g]));
      result.rows[j] = std::move(row);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return result;
}

/// Per-row scalar columns of a sweep table.
struct SweepColumns {
  double total_regret = 0.0;
  double incumbent_regret = 0.0;
  double mape = 0.0;
  double delay = 0.0;
  double delay_key = 0.0;
  double delay_non_key = 0.0;
  double adaptation = 0.0;  // first change; NaN if none or never adapted
  double decision_us = 0.0;
};

inline SweepColumns columns_of(const MetricsSummary& m) {
  SweepColumns c;
  c.total_regret = m.total_regret;
  c.incumbent_regret = m.incumbent_regret;
  c.mape = m.mape;
  c.delay = m.delay.overall;
  c.delay_key = m.delay.key;
  c.delay_non_key = m.delay.non_key;
  c.adaptation = (!m.adaptation.empty() && m.adaptation.front().frames)
                     ? static_cast<double>(*m.adaptation.front().frames)
                     : std::nan("");
  c.decision_us = m.decision.mean_us;
  return c;
}

/// Mean of each column over the seeds of one grid point (NaNs skipped).
inline SweepColumns point_mean(const SweepResult& r, std::size_t point) {
  std::vector<SweepColumns> cols;
  for (const auto& row : r.rows) {
    if (row.point == r.points[point]) cols.push_back(columns_of(row.metrics));
  }
  auto mean = [&](double SweepColumns::*field) {
    double s = 0.0;
    int n = 0;
    for (const auto& c : cols) {
      if (!std::isnan(c.*field)) {
        s += c.*field;
        ++n;
      }
    }
    return n > 0 ? s / n : std::nan("");
  };
  SweepColumns m;
  m.total_regret = mean(&SweepColumns::total_regret);
  m.incumbent_regret = mean(&SweepColumns::incumbent_regret);
  m.mape = mean(&SweepColumns::mape);
  m.delay = mean(&SweepColumns::delay);
  m.delay_key = mean(&SweepColumns::delay_key);
  m.delay_non_key = mean(&SweepColumns::delay_non_key);
  m.adaptation = mean(&SweepColumns::adaptation);
  m.decision_us = mean(&SweepColumns::decision_us);
  return m;
}

inline void write_sweep_csv(const SweepResult& r, std::ostream& out) {
  using detail::fmt_double;
  for (const auto& p : r.parameters) out << p << ',';
  out << "seed,total_regret_ms,incumbent_regret_ms,mape_percent,delay_ms,delay_key_ms,delay_non_key_ms,"
         "adaptation_frames,decision_us\n";
  auto emit = [&](const GridPoint& gp, const std::string& seed, const SweepColumns& c) {
    for (const auto& kv : gp) out << fmt_double(kv.second) << ',';
    out << seed << ',' << fmt_double(c.total_regret) << ',' << fmt_double(c.incumbent_regret) << ','
        << fmt_double(c.mape) << ',' << fmt_double(c.delay) << ',' << fmt_double(c.delay_key) << ','
        << fmt_double(c.delay_non_key) << ',' << fmt_double(c.adaptation) << ',' << fmt_double(c.decision_us)
        << '\n';
  };
  for (const auto& row : r.rows) emit(row.point, std::to_string(row.seed), columns_of(row.metrics));
  for (std::size_t g = 0; g < r.points.size(); ++g) emit(r.points[g], "mean", point_mean(r, g));
}

}  // namespace ans
