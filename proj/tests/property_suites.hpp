#pragma once

// Randomized invariant checks for model_ingest, env_sim, bandit_core and
// keyframe. Shared by the unit-test suite and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ans/ans.hpp"
#include "oracles.hpp"

namespace props {

struct Result {
  std::string suite;
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string first_failure;

  bool ok() const { return failures == 0 && cases > 0; }
};

// Returns an error message, or nullopt on success.
using Check = std::function<std::optional<std::string>(std::mt19937_64&)>;

inline Result run(const std::string& suite, const std::string& name, int cases, std::uint64_t seed,
                  const Check& check) {
  Result r{suite, name, 0, 0, {}};
  std::mt19937_64 rng(seed);
  for (int i = 0; i < cases; ++i) {
    ++r.cases;
    auto err = check(rng);
    if (err) {
      if (r.failures++ == 0) r.first_failure = "case " + std::to_string(i) + ": " + *err;
    }
  }
  return r;
}

inline double uni(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int uni_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline ans::DnnDescriptor random_descriptor(std::mt19937_64& rng, int min_units = 1, int max_units = 14) {
  ans::DnnDescriptor d;
  d.name = "random";
  d.input_size_mb = uni(rng, 0.05, 3.0);
  const int n = uni_int(rng, min_units, max_units);
  for (int i = 0; i < n; ++i) {
    ans::LayerSpec u;
    u.name = "u" + std::to_string(i);
    u.kind = static_cast<ans::LayerKind>(uni_int(rng, 0, 3));
    u.gmacs = uni(rng, 0.0, 4.0);
    u.output_mb = uni(rng, 0.001, 3.0);
    d.units.push_back(u);
  }
  return d;
}

inline ans::DeviceProfile random_device(std::mt19937_64& rng) {
  return {uni(rng, 0.0, 50.0), uni(rng, 0.0, 200.0), uni(rng, 0.0, 100.0), uni(rng, 0.0, 5.0)};
}

inline ans::ThetaVector random_theta(std::mt19937_64& rng) {
  ans::ThetaVector th;
  for (int i = 0; i < 6; ++i) th[i] = uni(rng, 0.0, 10.0);
  th[ans::kPsiMb] = uni(rng, 10.0, 800.0);
  return th;
}

inline ans::ContextVector random_unit_context(std::mt19937_64& rng) {
  ans::ContextVector x;
  for (int i = 0; i < ans::kContextDim; ++i) x[i] = uni(rng, 0.0, 1.0);
  return x;
}

inline std::string vec_str(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << v.transpose();
  return os.str();
}

// A small random learning problem: descriptor, device, stationary theta and
// the prepared contexts.
struct Problem {
  ans::DnnDescriptor desc;
  ans::EnvConfig env;
  std::vector<ans::ContextVector> raw;
  std::vector<ans::ContextVector> contexts;
  std::vector<double> d_f;
  ans::LearnerConfig learner;
};

inline Problem random_problem(std::mt19937_64& rng, int horizon) {
  Problem pr;
  pr.desc = random_descriptor(rng, 2, 10);
  pr.env.device = random_device(rng);
  pr.env.schedule = ans::DynamicsSchedule::constant(random_theta(rng));
  pr.env.noise.sigma_ms = uni(rng, 0.0, 5.0);
  pr.raw = ans::context_table(pr.desc);
  pr.contexts = ans::normalize_table(pr.raw, ans::feature_scale(pr.raw));
  pr.d_f = ans::frontend_profile(pr.desc, pr.env.device);
  pr.learner.alpha = uni(rng, 0.0, 200.0);
  pr.learner.beta = uni(rng, 0.01, 2.0);
  pr.learner.mu = uni(rng, 0.1, 0.45);
  pr.learner.horizon = horizon;
  pr.learner.l_key = 0.9;
  pr.learner.l_nonkey = 0.1;
  return pr;
}

struct Step {
  int partition;
  bool forced;
};

inline std::vector<Step> drive(const Problem& pr, ans::LearnerMode mode, int horizon, std::uint64_t seed,
                               double key_rate = 0.3) {
  ans::LearnerConfig cfg = pr.learner;
  cfg.mode = mode;
  ans::MuLinUcb learner(cfg);
  ans::Environment env(pr.env, pr.raw, seed);
  const auto keys = ans::bernoulli_keys(horizon, key_rate, seed);
  const int P = env.on_device_index();
  std::vector<Step> out;
  for (int t = 1; t <= horizon; ++t) {
    const auto sel = learner.select_partition(t, cfg.weight(keys[static_cast<std::size_t>(t - 1)]), pr.contexts, pr.d_f);
    const auto obs = env.observe(sel.partition, t);
    learner.update(sel.partition, P, pr.contexts[static_cast<std::size_t>(sel.partition)], obs);
    out.push_back({sel.partition, sel.forced});
  }
  return out;
}

// ---------------------------------------------------------------------------
// model_ingest

inline std::vector<Result> model_ingest_suite(int cases) {
  std::vector<Result> out;
  out.push_back(run("model_ingest", "context at P is zero", cases, 101, [](auto& rng) -> std::optional<std::string> {
    const auto d = random_descriptor(rng);
    if (!ans::build_context(d, d.on_device_index()).isZero(0.0)) return "non-zero x_P";
    return std::nullopt;
  }));
  out.push_back(run("model_ingest", "MAC features of x_0 sum to total GMACs", cases, 102,
                    [](auto& rng) -> std::optional<std::string> {
                      const auto d = random_descriptor(rng);
                      const auto x = ans::build_context(d, 0);
                      double total = 0.0;
                      for (const auto& u : d.units) total += u.gmacs;
                      const double s = x[ans::kConvGmacs] + x[ans::kFcGmacs] + x[ans::kActGmacs];
                      if (std::abs(s - total) > 1e-9 * std::max(1.0, total)) return "sum mismatch";
                      return std::nullopt;
                    }));
  out.push_back(run("model_ingest", "MAC/count columns non-increasing in p", cases, 103,
                    [](auto& rng) -> std::optional<std::string> {
                      const auto d = random_descriptor(rng);
                      const auto table = ans::context_table(d);
                      for (std::size_t p = 1; p < table.size(); ++p) {
                        for (int j = 0; j < 6; ++j) {
                          if (table[p][j] > table[p - 1][j] + 1e-12) {
                            return "column " + std::to_string(j) + " rises at p=" + std::to_string(p);
                          }
                        }
                      }
                      return std::nullopt;
                    }));
  out.push_back(run("model_ingest", "frontend profile non-decreasing, d_f(0) = 0", cases, 104,
                    [](auto& rng) -> std::optional<std::string> {
                      const auto d = random_descriptor(rng);
                      const auto df = ans::frontend_profile(d, random_device(rng));
                      if (df.front() != 0.0) return "d_f(0) != 0";
                      for (std::size_t p = 1; p < df.size(); ++p) {
                        if (df[p] < df[p - 1]) return "decreases at p=" + std::to_string(p);
                      }
                      return std::nullopt;
                    }));
  out.push_back(run("model_ingest", "context table matches independent recount", cases, 105,
                    [](auto& rng) -> std::optional<std::string> {
                      const auto d = random_descriptor(rng);
                      const auto table = ans::context_table(d);
                      for (int p = 0; p <= d.on_device_index(); ++p) {
                        const auto ref = oracle::recount_context(d, p);
                        const auto& x = table[static_cast<std::size_t>(p)];
                        for (int j = 0; j < 7; ++j) {
                          if (std::abs(x[j] - ref[static_cast<std::size_t>(j)]) > 1e-9 * (1.0 + std::abs(ref[j]))) {
                            return "p=" + std::to_string(p) + " feature " + std::to_string(j);
                          }
                        }
                      }
                      return std::nullopt;
                    }));
  return out;
}

// ---------------------------------------------------------------------------
// env_sim

inline std::vector<Result> env_sim_suite(int cases) {
  std::vector<Result> out;
  out.push_back(run("env_sim", "equal config and seed reproduce observations", cases, 201,
                    [](auto& rng) -> std::optional<std::string> {
                      const auto d = random_descriptor(rng, 1, 8);
                      ans::EnvConfig cfg;
                      cfg.schedule = ans::DynamicsSchedule::markov_switch(random_theta(rng), random_theta(rng),
                                                                          uni(rng, 0.0, 1.0));
                      cfg.noise.sigma_ms = uni(rng, 0.0, 10.0);
                      const auto seed = rng();
                      ans::Environment a(cfg, ans::context_table(d), seed), b(cfg, ans::context_table(d), seed);
                      for (int k = 0; k < 20; ++k) {
                        const int t = uni_int(rng, 1, 500);
                        const int p = uni_int(rng, 0, d.on_device_index());
                        if (a.observe(p, t) != b.observe(p, t)) return "diverged at t=" + std::to_string(t);
                      }
                      return std::nullopt;
                    }));
  out.push_back(run("env_sim", "noise within truncation bound", cases, 202,
                    [](auto& rng) -> std::optional<std::string> {
                      const auto d = random_descriptor(rng, 1, 8);
                      ans::EnvConfig cfg;
                      cfg.schedule = ans::DynamicsSchedule::constant(random_theta(rng));
                      cfg.noise.sigma_ms = uni(rng, 0.0, 200.0);
                      cfg.noise.truncation = uni(rng, 0.5, 4.0);
                      ans::Environment env(cfg, ans::context_table(d), rng());
                      const int t = uni_int(rng, 1, 10000);
                      const int p = uni_int(rng, 0, d.on_device_index() - 1);
                      const double mean = env.expected_edge_delay_at(p, t);
                      const double obs = *env.observe(p, t);
                      const double slack = obs == 0.0 ? mean : 0.0;  // clamped at zero
                      if (std::abs(obs - mean) > cfg.noise.bound() + slack + 1e-9) return "outside bound";
                      if (obs < 0.0) return "negative delay";
                      return std::nullopt;
                    }));
  out.push_back(run("env_sim", "expected delay linear in x", cases, 203,
                    [](auto& rng) -> std::optional<std::string> {
                      ans::EnvConfig cfg;
                      cfg.schedule = ans::DynamicsSchedule::constant(random_theta(rng));
                      const auto d = random_descriptor(rng, 1, 4);
                      ans::Environment env(cfg, ans::context_table(d), 1);
                      const int t = uni_int(rng, 1, 100);
                      const auto x = random_unit_context(rng), y = random_unit_context(rng);
                      const double a = uni(rng, 0.0, 5.0), b = uni(rng, 0.0, 5.0);
                      const double lhs = env.expected_edge_delay(a * x + b * y, t);
                      const double rhs = a * env.expected_edge_delay(x, t) + b * env.expected_edge_delay(y, t);
                      if (std::abs(lhs - rhs) > 1e-9 * (1.0 + std::abs(rhs))) return "not linear";
                      return std::nullopt;
                    }));
  return out;
}

// ---------------------------------------------------------------------------
// bandit_core

inline std::vector<Result> bandit_core_suite(int cases) {
  std::vector<Result> out;
  out.push_back(run("bandit_core", "ridge estimate equals batch solution", cases, 301,
                    [](auto& rng) -> std::optional<std::string> {
                      ans::LearnerConfig cfg;
                      cfg.beta = uni(rng, 0.001, 5.0);
                      cfg.horizon = 100;
                      ans::MuLinUcb learner(cfg);
                      std::vector<oracle::Vec> xs;
                      oracle::Vec ys;
                      const int n = uni_int(rng, 0, 40);
                      for (int k = 0; k < n; ++k) {
                        const auto x = random_unit_context(rng);
                        const double y = uni(rng, 0.0, 500.0);
                        learner.update(0, 1, x, y);
                        xs.emplace_back(x.data(), x.data() + 7);
                        ys.push_back(y);
                      }
                      const auto ref = oracle::batch_ridge(xs, ys, cfg.beta, 7);
                      const auto& th = learner.estimate_theta();
                      double num = 0.0, den = 0.0;
                      for (int j = 0; j < 7; ++j) {
                        num += (th[j] - ref[static_cast<std::size_t>(j)]) * (th[j] - ref[static_cast<std::size_t>(j)]);
                        den += ref[static_cast<std::size_t>(j)] * ref[static_cast<std::size_t>(j)];
                      }
                      if (std::sqrt(num) > 1e-8 * std::max(1.0, std::sqrt(den))) return "estimate " + vec_str(th);
                      return std::nullopt;
                    }));
  out.push_back(run("bandit_core", "A stays beta*I + sum xx^T, SPD, det non-decreasing", cases, 302,
                    [](auto& rng) -> std::optional<std::string> {
                      ans::LearnerConfig cfg;
                      cfg.beta = uni(rng, 0.001, 5.0);
                      cfg.horizon = 100;
                      ans::MuLinUcb learner(cfg);
                      ans::Matrix7 ref = cfg.beta * ans::Matrix7::Identity();
                      double det = ref.determinant();
                      const int n = uni_int(rng, 1, 30);
                      for (int k = 0; k < n; ++k) {
                        const auto x = random_unit_context(rng);
                        if (uni(rng, 0, 1) < 0.2) {
                          learner.update(1, 1, x, std::nullopt);  // on-device: no change
                        } else {
                          learner.update(0, 1, x, 1.0);
                          ref += x * x.transpose();
                        }
                        const auto& a = learner.gram();
                        if ((a - ref).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff())) return "A drift";
                        if ((a - a.transpose()).cwiseAbs().maxCoeff() != 0.0) return "A not symmetric";
                        Eigen::SelfAdjointEigenSolver<ans::Matrix7> es(a);
                        if (es.eigenvalues().minCoeff() <= 0.0) return "A not positive definite";
                        const double dt = a.determinant();
                        if (dt < det * (1.0 - 1e-12)) return "det decreased";
                        det = dt;
                      }
                      return std::nullopt;
                    }));
  out.push_back(run("bandit_core", "vanilla trap: first P starts an unbroken P run", cases, 303,
                    [](auto& rng) -> std::optional<std::string> {
                      const int T = 150;
                      auto pr = random_problem(rng, T);
                      const auto steps = drive(pr, ans::LearnerMode::vanilla_linucb, T, rng());
                      const int P = pr.desc.on_device_index();
                      bool trapped = false;
                      for (std::size_t i = 0; i < steps.size(); ++i) {
                        if (steps[i].forced) return "vanilla frame marked forced";
                        if (trapped && steps[i].partition != P) return "left P at t=" + std::to_string(i + 1);
                        trapped = trapped || steps[i].partition == P;
                      }
                      return std::nullopt;
                    }));
  out.push_back(run("bandit_core", "escape: forced frames avoid P, P runs bounded", cases, 304,
                    [](auto& rng) -> std::optional<std::string> {
                      const int T = 150;
                      auto pr = random_problem(rng, T);
                      const auto steps = drive(pr, ans::LearnerMode::mu_linucb, T, rng());
                      const int P = pr.desc.on_device_index();
                      const int bound = static_cast<int>(std::ceil(std::pow(T, pr.learner.mu)));
                      const ans::ForcedSchedule sched(T, pr.learner.mu);
                      int run_len = 0;
                      for (std::size_t i = 0; i < steps.size(); ++i) {
                        const int t = static_cast<int>(i) + 1;
                        if (steps[i].forced != sched.contains(t)) return "forced flag mismatch at t=" + std::to_string(t);
                        if (steps[i].forced && steps[i].partition == P) return "forced frame chose P";
                        run_len = steps[i].partition == P ? run_len + 1 : 0;
                        if (run_len > bound) return "P run of " + std::to_string(run_len);
                      }
                      return std::nullopt;
                    }));
  out.push_back(run("bandit_core", "argmin unchanged by common positive scaling", cases, 305,
                    [](auto& rng) -> std::optional<std::string> {
                      const int P = uni_int(rng, 2, 12);
                      std::vector<ans::ContextVector> xs(static_cast<std::size_t>(P + 1));
                      std::vector<double> df(static_cast<std::size_t>(P + 1));
                      for (int p = 0; p < P; ++p) xs[static_cast<std::size_t>(p)] = random_unit_context(rng);
                      xs[static_cast<std::size_t>(P)].setZero();
                      for (auto& v : df) v = uni(rng, 0.0, 300.0);
                      const double c = std::exp(uni(rng, -3.0, 3.0));
                      ans::LearnerConfig a, b;
                      a.alpha = uni(rng, 0.0, 100.0);
                      a.beta = uni(rng, 0.01, 2.0);
                      a.horizon = 1000;
                      b = a;
                      b.alpha = a.alpha * c;
                      ans::MuLinUcb la(a), lb(b);
                      std::vector<double> dfc(df);
                      for (auto& v : dfc) v *= c;
                      const int n = uni_int(rng, 0, 15);
                      for (int k = 0; k < n; ++k) {
                        const int p = uni_int(rng, 0, P - 1);
                        const double y = uni(rng, 0.0, 400.0);
                        la.update(p, P, xs[static_cast<std::size_t>(p)], y);
                        lb.update(p, P, xs[static_cast<std::size_t>(p)], y * c);
                      }
                      const int t = uni_int(rng, 1, 1000);
                      const double w = uni(rng, 0.01, 0.99);
                      const auto sa = la.select_partition(t, w, xs, df);
                      const auto sb = lb.select_partition(t, w, xs, dfc);
                      if (sa.partition == sb.partition) return std::nullopt;
                      // Allow only numerical near-ties.
                      const auto scores = la.last_scores();
                      if (std::abs(scores[static_cast<std::size_t>(sa.partition)] -
                                   scores[static_cast<std::size_t>(sb.partition)]) < 1e-9 * (1.0 + std::abs(scores[0]))) {
                        return std::nullopt;
                      }
                      return "chose " + std::to_string(sa.partition) + " vs " + std::to_string(sb.partition);
                    }));
  out.push_back(run("bandit_core", "determinism of decision sequence", cases, 306,
                    [](auto& rng) -> std::optional<std::string> {
                      const int T = 60;
                      auto pr = random_problem(rng, T);
                      const auto seed = rng();
                      const auto a = drive(pr, ans::LearnerMode::mu_linucb, T, seed);
                      const auto b = drive(pr, ans::LearnerMode::mu_linucb, T, seed);
                      for (std::size_t i = 0; i < a.size(); ++i) {
                        if (a[i].partition != b[i].partition) return "diverged at t=" + std::to_string(i + 1);
                      }
                      return std::nullopt;
                    }));
  return out;
}

// Empirical Lemma 1 coverage: one case per (frame, partition) pair with
// alpha set to the theoretical value. Returns the pair count and the number
// outside the confidence band.
struct Coverage {
  long long pairs = 0;
  long long misses = 0;
  double rate() const { return pairs == 0 ? 0.0 : 1.0 - static_cast<double>(misses) / static_cast<double>(pairs); }
};

inline Coverage coverage_run(const ans::Scenario& sc, int seeds, double delta = 0.05) {
  Coverage cov;
  const auto prep = ans::prepare(sc);
  const auto k = ans::problem_constants(sc, prep);
  ans::LearnerConfig cfg = prep.learner;
  cfg.mode = ans::LearnerMode::mu_linucb;
  cfg.alpha = ans::theoretical_alpha(k.c_theta, k.c_eta, ans::kContextDim, sc.horizon, delta, cfg.l_key, k.c_x);
  const int P = sc.descriptor.on_device_index();
  for (int s = 1; s <= seeds; ++s) {
    ans::MuLinUcb learner(cfg);
    ans::Environment env(sc.env, prep.raw_contexts, static_cast<std::uint64_t>(s));
    const auto keys = ans::key_flags(sc.keyframes, sc.horizon, static_cast<std::uint64_t>(s));
    for (int t = 1; t <= sc.horizon; ++t) {
      const double w = cfg.weight(keys[static_cast<std::size_t>(t - 1)]);
      const auto theta_n = prep.scale.to_normalized_coefficients(env.true_theta(t));
      for (int p = 0; p < P; ++p) {
        const auto& x = prep.contexts[static_cast<std::size_t>(p)];
        const double err = std::abs(learner.predict(x) - theta_n.dot(x));
        const double band = cfg.alpha * std::sqrt(1.0 - w) * learner.confidence_width(x);
        ++cov.pairs;
        if (err > band) ++cov.misses;
      }
      const auto sel = learner.select_partition(t, w, prep.contexts, prep.d_f);
      learner.update(sel.partition, P, prep.contexts[static_cast<std::size_t>(sel.partition)],
                     env.observe(sel.partition, t));
    }
  }
  return cov;
}

// ---------------------------------------------------------------------------
// keyframe

inline ans::Frame random_frame(std::mt19937_64& rng, int w, int h, double lo, double hi) {
  ans::Frame f(w, h);
  for (auto& px : f.pixels) px = std::round(uni(rng, lo, hi));
  return f;
}

inline std::vector<Result> keyframe_suite(int cases) {
  std::vector<Result> out;
  out.push_back(run("keyframe", "ssim symmetric and 1 on identical frames", cases, 401,
                    [](auto& rng) -> std::optional<std::string> {
                      const int w = uni_int(rng, 1, 24), h = uni_int(rng, 1, 24);
                      const auto a = random_frame(rng, w, h, 0, 255), b = random_frame(rng, w, h, 0, 255);
                      if (std::abs(ans::ssim(a, a) - 1.0) > 1e-12) return "ssim(a,a) != 1";
                      if (std::abs(ans::ssim(a, b) - ans::ssim(b, a)) > 1e-12) return "not symmetric";
                      return std::nullopt;
                    }));
  out.push_back(run("keyframe", "ssim agrees with reference formula", cases, 402,
                    [](auto& rng) -> std::optional<std::string> {
                      const int w = uni_int(rng, 1, 24), h = uni_int(rng, 1, 24);
                      const auto a = random_frame(rng, w, h, 0, 255), b = random_frame(rng, w, h, 0, 255);
                      if (std::abs(ans::ssim(a, b) - oracle::ssim(a.pixels, b.pixels)) > 1e-9) return "mismatch";
                      return std::nullopt;
                    }));
  out.push_back(run("keyframe", "ssim nearly invariant to +10 shift", cases, 403,
                    [](auto& rng) -> std::optional<std::string> {
                      const int w = uni_int(rng, 8, 24), h = uni_int(rng, 8, 24);
                      const auto a = random_frame(rng, w, h, 80, 170);
                      auto b = a;
                      std::uniform_int_distribution<int> jit(-15, 15);
                      for (auto& px : b.pixels) px = std::clamp(px + jit(rng), 0.0, 255.0);
                      auto a2 = a, b2 = b;
                      for (auto& px : a2.pixels) px += 10.0;
                      for (auto& px : b2.pixels) px += 10.0;
                      const double d = std::abs(ans::ssim(a, b) - ans::ssim(a2, b2));
                      if (d >= 0.01) return "shift changed ssim by " + std::to_string(d);
                      return std::nullopt;
                    }));
  out.push_back(run("keyframe", "weight mapping is a pure function of key flag", cases, 404,
                    [](auto& rng) -> std::optional<std::string> {
                      ans::LearnerConfig cfg;
                      cfg.l_nonkey = uni(rng, 0.01, 0.5);
                      cfg.l_key = uni(rng, cfg.l_nonkey + 0.01, 0.99);
                      const bool key = uni(rng, 0, 1) < 0.5;
                      const double w1 = cfg.weight(key), w2 = cfg.weight(key);
                      if (w1 != w2 || w1 != (key ? cfg.l_key : cfg.l_nonkey)) return "weight mismatch";
                      return std::nullopt;
                    }));
  return out;
}

inline std::vector<Result> all(int cases) {
  std::vector<Result> out;
  for (auto* suite : {&model_ingest_suite, &env_sim_suite, &bandit_core_suite, &keyframe_suite}) {
    auto r = (*suite)(cases);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace props
