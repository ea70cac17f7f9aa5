#pragma once

// Experiment scenario documents: which DNN, how the environment evolves, how
// the learner is configured, how key frames arise, and which policy runs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ans/bandit_core.hpp"
#include "ans/detail/json_fields.hpp"
#include "ans/env_sim.hpp"
#include "ans/error.hpp"
#include "ans/model_ingest.hpp"

namespace ans {

enum class Policy { ans, linucb, oracle, mo, eo, layerwise };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::ans: return "ans";
    case Policy::linucb: return "linucb";
    case Policy::oracle: return "oracle";
    case Policy::mo: return "mo";
    case Policy::eo: return "eo";
    case Policy::layerwise: return "layerwise";
  }
  return "ans";
}

inline Policy parse_policy(const std::string& s, const std::string& path = "policy") {
  if (s == "ans") return Policy::ans;
  if (s == "linucb") return Policy::linucb;
  if (s == "oracle") return Policy::oracle;
  if (s == "mo") return Policy::mo;
  if (s == "eo") return Policy::eo;
  if (s == "layerwise") return Policy::layerwise;
  throw SchemaError(path, "unknown policy '" + s + "' (expected ans|linucb|oracle|mo|eo|layerwise)");
}

enum class KeyframeMode { flags, ssim };

struct KeyframeConfig {
  KeyframeMode mode = KeyframeMode::flags;
  /// flags mode: explicit 1-based key frames, or a Bernoulli rate when set.
  std::vector<int> flags;
  std::optional<double> rate;
  /// ssim mode: synthetic stream with scene cuts at `scene_changes` and/or
  /// at each frame with probability `change_rate`.
  double threshold = 0.9;
  int width = 32;
  int height = 32;
  std::vector<int> scene_changes;
  double change_rate = 0.0;
};

/// How the learner's alpha is chosen: a fixed number, or the prediction-error
/// bound evaluated from the scenario's own constants.
struct AlphaSpec {
  bool theoretical = false;
  double delta = 0.05;
};

struct Scenario {
  std::filesystem::path descriptor_path;
  DnnDescriptor descriptor;
  int horizon = 1;
  EnvConfig env;
  LearnerConfig learner;
  AlphaSpec alpha_spec;
  KeyframeConfig keyframes;
  Policy policy = Policy::ans;
  std::uint64_t seed = 1;
  int replications = 1;

  void validate() const {
    ans::validate(descriptor);
    if (horizon < 1) throw SchemaError("horizon", "must be >= 1");
    if (replications < 1) throw SchemaError("replications", "must be >= 1");
    env.schedule.validate();
    learner.validate();
    if (keyframes.rate && !(*keyframes.rate >= 0.0 && *keyframes.rate <= 1.0)) {
      throw SchemaError("keyframes.rate", "must lie in [0, 1]");
    }
    if (!(keyframes.threshold >= 0.0 && keyframes.threshold <= 1.0)) {
      throw SchemaError("keyframes.threshold", "must lie in [0, 1]");
    }
    if (keyframes.width <= 0 || keyframes.height <= 0) {
      throw SchemaError("keyframes.dims", "dimensions must be positive");
    }
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline ThetaVector parse_theta_array(const json& v, const std::string& path) {
  const auto nums = number_array(v, path, kContextDim);
  ThetaVector th;
  for (int i = 0; i < kContextDim; ++i) th[i] = nums[static_cast<std::size_t>(i)];
  validate_theta(th, path);
  return th;
}

/// Either `<key>: [7 numbers]`, or `uplink_mbps` plus `compute_theta: [6]`.
inline ThetaVector parse_theta_spec(const json& obj, const std::string& key, const std::string& base,
                                    const std::string& uplink_key = "uplink_mbps",
                                    const std::string& compute_key = "compute_theta") {
  if (obj.contains(key)) return parse_theta_array(obj.at(key), join_path(base, key));
  if (!obj.contains(uplink_key)) {
    throw SchemaError(join_path(base, key), "missing (give '" + key + "' or '" + uplink_key + "' + '" +
                                                compute_key + "')");
  }
  const double mbps = require_number(obj, uplink_key, base);
  if (!(mbps > 0.0)) throw SchemaError(join_path(base, uplink_key), "must be positive");
  const auto comp = number_array(require(obj, compute_key, base), join_path(base, compute_key), 6);
  std::array<double, 6> c{};
  for (std::size_t i = 0; i < 6; ++i) c[i] = comp[i];
  ThetaVector th = make_theta(c, mbps);
  validate_theta(th, join_path(base, compute_key));
  return th;
}

inline DeviceProfile parse_device(const json& v, const std::string& base) {
  DeviceProfile d;
  d.ms_per_gmac_conv = require_non_negative(v, "ms_per_gmac_conv", base);
  d.ms_per_gmac_fc = require_non_negative(v, "ms_per_gmac_fc", base);
  d.ms_per_gmac_act = require_non_negative(v, "ms_per_gmac_act", base);
  d.fixed_overhead_ms = require_non_negative(v, "fixed_overhead_ms", base);
  return d;
}

inline EnvConfig parse_env(const json& v) {
  const std::string base = "env";
  EnvConfig env;
  env.device = parse_device(require(v, "device", base), "env.device");
  const std::string mode = require_string(v, "mode", base);
  if (mode == "stationary") {
    env.schedule = DynamicsSchedule::constant(parse_theta_spec(v, "theta", base));
  } else if (mode == "steps" || mode == "step_sequence") {
    const json& steps = require(v, "steps", base);
    if (!steps.is_array() || steps.empty()) throw SchemaError("env.steps", "expected a non-empty array");
    std::vector<StepSegment> segs;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto p = index_path("env.steps", i);
      StepSegment seg;
      seg.start_frame = static_cast<int>(as_integer(require(steps[i], "start", p), join_path(p, "start")));
      seg.theta = parse_theta_spec(steps[i], "theta", p);
      segs.push_back(seg);
    }
    env.schedule = DynamicsSchedule::step_sequence(std::move(segs));
  } else if (mode == "markov" || mode == "markov_switch") {
    const json& m = require(v, "markov", base);
    const std::string mb = "env.markov";
    const ThetaVector a = parse_theta_spec(m, "theta_a", mb, "uplink_mbps_a", "compute_theta");
    const ThetaVector b = parse_theta_spec(m, "theta_b", mb, "uplink_mbps_b", "compute_theta");
    env.schedule = DynamicsSchedule::markov_switch(a, b, require_number(m, "p_f", mb));
  } else {
    throw SchemaError("env.mode", "unknown mode '" + mode + "' (expected stationary|steps|markov)");
  }
  env.noise.sigma_ms = require_non_negative(v, "noise_sigma_ms", base);
  if (v.contains("noise_truncation")) {
    env.noise.truncation = as_number(v.at("noise_truncation"), "env.noise_truncation");
  }
  if (v.contains("nonlinear_eps")) env.nonlinear_eps = as_number(v.at("nonlinear_eps"), "env.nonlinear_eps");
  env.schedule.validate();
  return env;
}

inline void parse_learner(const json& v, LearnerConfig& cfg, AlphaSpec& alpha) {
  const std::string base = "learner";
  const std::string mode = require_string(v, "mode", base);
  if (mode == "mu_linucb") {
    cfg.mode = LearnerMode::mu_linucb;
  } else if (mode == "vanilla" || mode == "vanilla_linucb") {
    cfg.mode = LearnerMode::vanilla_linucb;
  } else {
    throw SchemaError("learner.mode", "unknown mode '" + mode + "' (expected mu_linucb|vanilla)");
  }
  const json& a = require(v, "alpha", base);
  if (a.is_string() && a.get<std::string>() == "theoretical") {
    alpha.theoretical = true;
    if (v.contains("delta")) alpha.delta = as_number(v.at("delta"), "learner.delta");
  } else {
    cfg.alpha = as_number(a, "learner.alpha");
  }
  cfg.beta = require_number(v, "beta", base);
  cfg.mu = require_number(v, "mu", base);
  const json& h = require(v, "horizon", base);
  if (h.is_string()) {
    if (h.get<std::string>() != "unknown") throw SchemaError("learner.horizon", "expected an integer or \"unknown\"");
    cfg.horizon.reset();
    cfg.t0 = static_cast<int>(as_integer(require(v, "t0", base), "learner.t0"));
  } else {
    cfg.horizon = static_cast<int>(as_integer(h, "learner.horizon"));
    if (v.contains("t0")) cfg.t0 = static_cast<int>(as_integer(v.at("t0"), "learner.t0"));
  }
  cfg.l_key = require_number(v, "l_key", base);
  cfg.l_nonkey = require_number(v, "l_nonkey", base);
  if (v.contains("reset_per_phase")) {
    if (!v.at("reset_per_phase").is_boolean()) throw SchemaError("learner.reset_per_phase", "expected a boolean");
    cfg.reset_per_phase = v.at("reset_per_phase").get<bool>();
  }
}

inline std::vector<int> int_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(as_integer(v[i], index_path(path, i))));
  return out;
}

inline KeyframeConfig parse_keyframes(const json& v) {
  const std::string base = "keyframes";
  KeyframeConfig kf;
  const std::string mode = require_string(v, "mode", base);
  if (mode == "flags") {
    kf.mode = KeyframeMode::flags;
    if (v.contains("flags")) kf.flags = int_array(v.at("flags"), "keyframes.flags");
    if (v.contains("rate")) kf.rate = as_number(v.at("rate"), "keyframes.rate");
    if (!v.contains("flags") && !v.contains("rate")) {
      throw SchemaError("keyframes.flags", "flags mode needs 'flags' or 'rate'");
    }
  } else if (mode == "ssim") {
    kf.mode = KeyframeMode::ssim;
    kf.threshold = require_number(v, "threshold", base);
    if (v.contains("dims")) {
      const auto dims = number_array(v.at("dims"), "keyframes.dims", 2);
      kf.width = static_cast<int>(dims[0]);
      kf.height = static_cast<int>(dims[1]);
    }
    if (v.contains("scene_changes")) kf.scene_changes = int_array(v.at("scene_changes"), "keyframes.scene_changes");
    if (v.contains("change_rate")) kf.change_rate = as_number(v.at("change_rate"), "keyframes.change_rate");
  } else {
    throw SchemaError("keyframes.mode", "unknown mode '" + mode + "' (expected flags|ssim)");
  }
  return kf;
}

}  // namespace detail

/// Parses a scenario document. Relative descriptor paths resolve against
/// `base_dir`.
inline Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  using namespace detail;
  Scenario sc;
  sc.descriptor_path = require_string(doc, "descriptor", "");
  if (sc.descriptor_path.is_relative()) sc.descriptor_path = base_dir / sc.descriptor_path;
  sc.descriptor = load_descriptor(sc.descriptor_path);
  sc.horizon = static_cast<int>(as_integer(require(doc, "horizon", ""), "horizon"));
  sc.env = parse_env(require(doc, "env", ""));
  parse_learner(require(doc, "learner", ""), sc.learner, sc.alpha_spec);
  sc.keyframes = parse_keyframes(require(doc, "keyframes", ""));
  sc.policy = parse_policy(require_string(doc, "policy", ""));
  if (doc.contains("seed")) sc.seed = static_cast<std::uint64_t>(as_integer(doc.at("seed"), "seed"));
  if (doc.contains("replications")) {
    sc.replications = static_cast<int>(as_integer(doc.at("replications"), "replications"));
  }
  sc.validate();
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", path.string() + ": malformed scenario: " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

/// Overrides one scenario parameter by name; used by sweeps.
/// Known names: mu, alpha, beta, p_f, sigma, l_key, l_nonkey, l_ratio
/// (l_nonkey = l_key / ratio), threshold, key_rate, horizon.
inline void apply_parameter(Scenario& sc, const std::string& name, double value) {
  if (name == "mu") {
    sc.learner.mu = value;
  } else if (name == "alpha") {
    sc.learner.alpha = value;
    sc.alpha_spec.theoretical = false;
  } else if (name == "beta") {
    sc.learner.beta = value;
  } else if (name == "p_f") {
    if (sc.env.schedule.mode != DynamicsMode::markov_switch) {
      throw SchemaError("p_f", "parameter p_f needs a markov environment");
    }
    sc.env.schedule.markov.switch_prob = value;
  } else if (name == "sigma") {
    sc.env.noise.sigma_ms = value;
  } else if (name == "l_key") {
    sc.learner.l_key = value;
  } else if (name == "l_nonkey") {
    sc.learner.l_nonkey = value;
  } else if (name == "l_ratio") {
    sc.learner.l_nonkey = sc.learner.l_key / value;
  } else if (name == "threshold") {
    sc.keyframes.threshold = value;
  } else if (name == "key_rate") {
    sc.keyframes.mode = KeyframeMode::flags;
    sc.keyframes.rate = value;
  } else if (name == "horizon") {
    sc.horizon = static_cast<int>(value);
    if (sc.learner.horizon) sc.learner.horizon = sc.horizon;
  } else {
    throw SchemaError(name, "unknown sweep parameter");
  }
  sc.validate();
}

}  // namespace ans
