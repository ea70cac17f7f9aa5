#pragma once

// Frame-by-frame experiment loop and the metrics computed from its trace.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "ans/bandit_core.hpp"
#include "ans/baselines.hpp"
#include "ans/env_sim.hpp"
#include "ans/keyframe.hpp"
#include "ans/model_ingest.hpp"
#include "ans/scenario.hpp"

namespace ans {

struct TraceRecord {
  int t = 1;
  bool is_key = false;
  double weight = 0.0;
  bool forced = false;
  int partition = 0;
  double d_f = 0.0;
  /// Policy's edge-delay prediction for its choice; NaN when it has none.
  double predicted_de = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> observed_de;
  double expected_de = 0.0;
  int oracle_partition = 0;
  double oracle_total = 0.0;
  double regret = 0.0;

  double expected_total() const { return d_f + expected_de; }
};

struct Trace {
  Policy policy = Policy::ans;
  std::uint64_t seed = 0;
  int on_device_index = 0;
  std::vector<int> change_frames;
  std::vector<TraceRecord> records;
  /// Wall time of each decision in microseconds (not part of the CSV).
  std::vector<double> decision_us;
};

/// Everything a run needs that depends on the scenario but not the seed.
struct PreparedScenario {
  std::vector<ContextVector> raw_contexts;
  std::vector<ContextVector> contexts;  // normalized to the unit box
  FeatureScale scale;
  std::vector<double> d_f;
  LearnerConfig learner;
};

/// Norm bounds of the normalized problem: C_theta over every schedule state,
/// C_eta from the noise truncation, C_x over the context table.
struct ProblemConstants {
  double c_theta = 0.0;
  double c_eta = 0.0;
  double c_x = 0.0;
};

inline ProblemConstants problem_constants(const Scenario& sc, const PreparedScenario& prep) {
  ProblemConstants k;
  for (const auto& th : sc.env.schedule.states()) {
    k.c_theta = std::max(k.c_theta, prep.scale.to_normalized_coefficients(th).norm());
  }
  k.c_eta = sc.env.noise.bound();
  for (const auto& x : prep.contexts) k.c_x = std::max(k.c_x, x.norm());
  return k;
}

inline PreparedScenario prepare(const Scenario& sc) {
  PreparedScenario prep;
  prep.raw_contexts = context_table(sc.descriptor);
  prep.scale = feature_scale(prep.raw_contexts);
  prep.contexts = normalize_table(prep.raw_contexts, prep.scale);
  prep.d_f = frontend_profile(sc.descriptor, sc.env.device);
  prep.learner = sc.learner;
  if (sc.alpha_spec.theoretical) {
    const auto k = problem_constants(sc, prep);
    prep.learner.alpha = theoretical_alpha(k.c_theta, k.c_eta, kContextDim, sc.horizon,
                                           sc.alpha_spec.delta, sc.learner.l_key, k.c_x);
  }
  return prep;
}

/// Per-frame key flags for the scenario's key-frame source.
inline std::vector<bool> key_flags(const KeyframeConfig& kf, int horizon, std::uint64_t seed) {
  if (kf.mode == KeyframeMode::flags) {
    if (kf.rate) return bernoulli_keys(horizon, *kf.rate, seed);
    return listed_keys(horizon, kf.flags);
  }
  std::vector<int> changes = kf.scene_changes;
  if (kf.change_rate > 0.0) {
    const auto cuts = bernoulli_keys(horizon, kf.change_rate, seed ^ 0x5ce9e5ULL);
    for (int t = 2; t <= horizon; ++t) {
      if (cuts[static_cast<std::size_t>(t - 1)]) changes.push_back(t);
    }
  }
  const auto stream = synth_stream(horizon, kf.width, kf.height, changes, seed);
  return detect_keys(stream, kf.threshold);
}

/// Runs one replication. Per frame: key flag and weight, policy decision
/// (forced-sampling aware for the learners), observation, learner update,
/// and the oracle comparison on noise-free expectations.
inline Trace run(const Scenario& sc, std::uint64_t seed, const PreparedScenario& prep) {
  Environment env(sc.env, prep.raw_contexts, seed);
  const int P = env.on_device_index();
  const auto keys = key_flags(sc.keyframes, sc.horizon, seed);

  std::optional<MuLinUcb> learner;
  if (sc.policy == Policy::ans || sc.policy == Policy::linucb) {
    LearnerConfig cfg = prep.learner;
    cfg.mode = sc.policy == Policy::linucb ? LearnerMode::vanilla_linucb : LearnerMode::mu_linucb;
    learner.emplace(cfg);
  }

  Trace trace;
  trace.policy = sc.policy;
  trace.seed = seed;
  trace.on_device_index = P;
  trace.change_frames = sc.env.schedule.change_frames();
  trace.records.reserve(static_cast<std::size_t>(sc.horizon));
  trace.decision_us.reserve(static_cast<std::size_t>(sc.horizon));

  std::vector<double> expected(static_cast<std::size_t>(P + 1));
  std::vector<double> totals(static_cast<std::size_t>(P + 1));

  for (int t = 1; t <= sc.horizon; ++t) {
    TraceRecord rec;
    rec.t = t;
    rec.is_key = keys[static_cast<std::size_t>(t - 1)];
    rec.weight = sc.learner.weight(rec.is_key);

    for (int p = 0; p <= P; ++p) {
      expected[static_cast<std::size_t>(p)] = env.expected_edge_delay_at(p, t);
      totals[static_cast<std::size_t>(p)] = prep.d_f[static_cast<std::size_t>(p)] + expected[static_cast<std::size_t>(p)];
    }

    const auto start = std::chrono::steady_clock::now();
    switch (sc.policy) {
      case Policy::ans:
      case Policy::linucb: {
        const Selection sel = learner->select_partition(t, rec.weight, prep.contexts, prep.d_f);
        rec.partition = sel.partition;
        rec.forced = sel.forced;
        rec.predicted_de = rec.partition == P ? 0.0 : learner->predict(prep.contexts[static_cast<std::size_t>(rec.partition)]);
        break;
      }
      case Policy::oracle:
        rec.partition = oracle_select(totals);
        rec.predicted_de = expected[static_cast<std::size_t>(rec.partition)];
        break;
      case Policy::mo:
        rec.partition = mo_select(P);
        rec.predicted_de = 0.0;
        break;
      case Policy::eo:
        rec.partition = eo_select();
        break;
      case Policy::layerwise: {
        const auto prof = LayerwiseProfiler::fit(sc.descriptor, env.true_theta(t));
        rec.partition = prof.select(prep.raw_contexts, prep.d_f);
        rec.predicted_de = prof.predict(prep.raw_contexts[static_cast<std::size_t>(rec.partition)]);
        break;
      }
    }
    const auto stop = std::chrono::steady_clock::now();
    trace.decision_us.push_back(std::chrono::duration<double, std::micro>(stop - start).count());

    const auto pi = static_cast<std::size_t>(rec.partition);
    rec.d_f = prep.d_f[pi];
    rec.expected_de = expected[pi];
    rec.observed_de = env.observe(rec.partition, t);
    if (learner) learner->update(rec.partition, P, prep.contexts[pi], rec.observed_de);

    rec.oracle_partition = oracle_select(totals);
    rec.oracle_total = totals[static_cast<std::size_t>(rec.oracle_partition)];
    rec.regret = totals[pi] - rec.oracle_total;
    trace.records.push_back(rec);
  }
  return trace;
}

inline Trace run(const Scenario& sc, std::uint64_t seed) { return run(sc, seed, prepare(sc)); }

// ---------------------------------------------------------------------------
// Metrics

inline std::vector<double> cumulative_regret(const Trace& tr) {
  std::vector<double> out;
  out.reserve(tr.records.size());
  double acc = 0.0;
  for (const auto& r : tr.records) {
    acc += r.regret;
    out.push_back(acc);
  }
  return out;
}

/// Regret summed over frames first..last (inclusive, 1-based, clipped).
inline double regret_between(const Trace& tr, int first, int last) {
  double s = 0.0;
  for (const auto& r : tr.records) {
    if (r.t >= first && r.t <= last) s += r.regret;
  }
  return s;
}

/// Mean absolute percentage error of the policy's edge-delay prediction
/// against the noise-free truth, over frames first..last that offloaded
/// (p < P) and carry a prediction. NaN when no frame qualifies.
inline double prediction_mape(const Trace& tr, int first = 1, int last = std::numeric_limits<int>::max()) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : tr.records) {
    if (r.t < first || r.t > last) continue;
    if (r.partition == tr.on_device_index || std::isnan(r.predicted_de) || !(r.expected_de > 0.0)) continue;
    sum += std::abs(r.predicted_de - r.expected_de) / r.expected_de;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : 100.0 * sum / n;
}

struct DelayBreakdown {
  double overall = 0.0;
  double key = std::numeric_limits<double>::quiet_NaN();
  double non_key = std::numeric_limits<double>::quiet_NaN();
};

/// Mean noise-free end-to-end delay over frames first..last, split by key flag.
inline DelayBreakdown average_delay(const Trace& tr, int first = 1, int last = std::numeric_limits<int>::max()) {
  double all = 0.0, key = 0.0, non = 0.0;
  int n = 0, nk = 0, nn = 0;
  for (const auto& r : tr.records) {
    if (r.t < first || r.t > last) continue;
    const double d = r.expected_total();
    all += d;
    ++n;
    if (r.is_key) {
      key += d;
      ++nk;
    } else {
      non += d;
      ++nn;
    }
  }
  DelayBreakdown out;
  out.overall = n > 0 ? all / n : std::numeric_limits<double>::quiet_NaN();
  if (nk > 0) out.key = key / nk;
  if (nn > 0) out.non_key = non / nn;
  return out;
}

inline constexpr int kAdaptationWindow = 20;

/// Frames from `change_frame` until the policy starts a run of `window`
/// consecutive oracle-optimal choices; nullopt if it never does before the
/// next change. When the optimum is on-device, forced frames cannot match it
/// and are skipped instead of breaking the run.
inline std::optional<int> adaptation_time(const Trace& tr, int change_frame, int window = kAdaptationWindow) {
  int end = std::numeric_limits<int>::max();
  for (int c : tr.change_frames) {
    if (c > change_frame) end = std::min(end, c);
  }
  int run = 0;
  int start = 0;
  for (const auto& r : tr.records) {
    if (r.t < change_frame) continue;
    if (r.t >= end) break;
    if (r.forced && r.oracle_partition == tr.on_device_index) continue;
    if (r.partition != r.oracle_partition) {
      run = 0;
      continue;
    }
    if (run++ == 0) start = r.t;
    if (run == window) return start - change_frame;
  }
  return std::nullopt;
}

struct TimingStats {
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p99_us = 0.0;
  double max_us = 0.0;
};

inline TimingStats timing_stats(std::vector<double> us) {
  TimingStats s;
  if (us.empty()) return s;
  s.mean_us = std::accumulate(us.begin(), us.end(), 0.0) / static_cast<double>(us.size());
  std::sort(us.begin(), us.end());
  auto at = [&](double q) { return us[static_cast<std::size_t>(q * static_cast<double>(us.size() - 1))]; };
  s.p50_us = at(0.5);
  s.p99_us = at(0.99);
  s.max_us = us.back();
  return s;
}

struct Adaptation {
  int change_frame = 0;
  std::optional<int> frames;
};

struct MetricsSummary {
  Policy policy = Policy::ans;
  std::uint64_t seed = 0;
  int horizon = 0;
  std::vector<double> regret_curve;
  double total_regret = 0.0;
  /// Regret before the first scripted change (whole run when there is none).
  double incumbent_regret = 0.0;
  double mape = std::numeric_limits<double>::quiet_NaN();
  DelayBreakdown delay;
  std::vector<Adaptation> adaptation;
  TimingStats decision;
  int forced_frames = 0;
  int on_device_frames = 0;
};

inline MetricsSummary summarize(const Trace& tr) {
  MetricsSummary m;
  m.policy = tr.policy;
  m.seed = tr.seed;
  m.horizon = static_cast<int>(tr.records.size());
  m.regret_curve = cumulative_regret(tr);
  m.total_regret = m.regret_curve.empty() ? 0.0 : m.regret_curve.back();
  const int first_change = tr.change_frames.empty() ? m.horizon + 1 : tr.change_frames.front();
  m.incumbent_regret = regret_between(tr, 1, first_change - 1);
  m.mape = prediction_mape(tr);
  m.delay = average_delay(tr);
  for (int c : tr.change_frames) m.adaptation.push_back({c, adaptation_time(tr, c)});
  m.decision = timing_stats(tr.decision_us);
  for (const auto& r : tr.records) {
    m.forced_frames += r.forced ? 1 : 0;
    m.on_device_frames += r.partition == tr.on_device_index ? 1 : 0;
  }
  return m;
}

}  // namespace ans
