#pragma once

// Simulated edge-offloading environment. The ground truth is linear in the
// partition context, d_e = theta*(t)^T x_p + eta, with theta*(t) following a
// scripted or Markov-switching schedule and eta a truncated Gaussian.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ans/detail/random.hpp"
#include "ans/error.hpp"
#include "ans/model_ingest.hpp"

namespace ans {

/// Ground-truth coefficients aligned with ContextVector: ms/GMAC for back-end
/// conv/fc/act compute, ms per back-end conv/fc/act layer, ms/MB uplink.
using ThetaVector = Eigen::Matrix<double, kContextDim, 1>;

/// ms per MB shipped over an uplink of `mbps` megabits per second.
inline double uplink_ms_per_mb(double mbps) {
  if (!(mbps > 0.0)) throw std::invalid_argument("uplink rate must be positive");
  return 8000.0 / mbps;
}

inline ThetaVector make_theta(const std::array<double, 6>& compute, double uplink_mbps) {
  ThetaVector th;
  for (int i = 0; i < 6; ++i) th[i] = compute[static_cast<std::size_t>(i)];
  th[kPsiMb] = uplink_ms_per_mb(uplink_mbps);
  return th;
}

inline void validate_theta(const ThetaVector& th, const std::string& path) {
  for (int i = 0; i < kContextDim; ++i) {
    if (!std::isfinite(th[i]) || th[i] < 0.0) {
      throw SchemaError(path, "theta components must be finite and non-negative");
    }
  }
}

enum class DynamicsMode { stationary, step_sequence, markov_switch };

struct StepSegment {
  int start_frame = 1;
  ThetaVector theta = ThetaVector::Zero();
};

struct MarkovSwitch {
  ThetaVector state_a = ThetaVector::Zero();
  ThetaVector state_b = ThetaVector::Zero();
  double switch_prob = 0.0;  // P_f, per frame
};

struct DynamicsSchedule {
  DynamicsMode mode = DynamicsMode::stationary;
  ThetaVector stationary = ThetaVector::Zero();
  std::vector<StepSegment> steps;
  MarkovSwitch markov;

  static DynamicsSchedule constant(const ThetaVector& th) {
    DynamicsSchedule s;
    s.mode = DynamicsMode::stationary;
    s.stationary = th;
    return s;
  }
  static DynamicsSchedule step_sequence(std::vector<StepSegment> segments) {
    DynamicsSchedule s;
    s.mode = DynamicsMode::step_sequence;
    s.steps = std::move(segments);
    return s;
  }
  static DynamicsSchedule markov_switch(const ThetaVector& a, const ThetaVector& b, double p_f) {
    DynamicsSchedule s;
    s.mode = DynamicsMode::markov_switch;
    s.markov = {a, b, p_f};
    return s;
  }

  void validate() const {
    switch (mode) {
      case DynamicsMode::stationary:
        validate_theta(stationary, "env.theta");
        break;
      case DynamicsMode::step_sequence: {
        if (steps.empty()) throw SchemaError("env.steps", "step sequence needs at least one segment");
        if (steps.front().start_frame != 1) {
          throw SchemaError("env.steps[0].start", "first segment must start at frame 1");
        }
        for (std::size_t i = 0; i < steps.size(); ++i) {
          validate_theta(steps[i].theta, "env.steps[" + std::to_string(i) + "]");
          if (i > 0 && steps[i].start_frame <= steps[i - 1].start_frame) {
            throw SchemaError("env.steps[" + std::to_string(i) + "].start",
                              "start frames must be strictly increasing");
          }
        }
        break;
      }
      case DynamicsMode::markov_switch:
        validate_theta(markov.state_a, "env.markov.theta_a");
        validate_theta(markov.state_b, "env.markov.theta_b");
        if (!(markov.switch_prob >= 0.0 && markov.switch_prob <= 1.0)) {
          throw SchemaError("env.markov.p_f", "switch probability must lie in [0, 1]");
        }
        break;
    }
  }

  /// Frames at which a scripted change takes effect (step mode only).
  std::vector<int> change_frames() const {
    std::vector<int> out;
    if (mode == DynamicsMode::step_sequence) {
      for (std::size_t i = 1; i < steps.size(); ++i) out.push_back(steps[i].start_frame);
    }
    return out;
  }

  /// Every coefficient vector the schedule can produce.
  std::vector<ThetaVector> states() const {
    switch (mode) {
      case DynamicsMode::stationary: return {stationary};
      case DynamicsMode::markov_switch: return {markov.state_a, markov.state_b};
      case DynamicsMode::step_sequence: {
        std::vector<ThetaVector> out;
        for (const auto& s : steps) out.push_back(s.theta);
        return out;
      }
    }
    return {};
  }
};

/// Truncated Gaussian noise; bounded, hence C_eta-sub-Gaussian with
/// C_eta = truncation * sigma.
struct NoiseModel {
  double sigma_ms = 0.0;
  double truncation = 3.0;

  double bound() const { return truncation * sigma_ms; }
};

struct EnvConfig {
  DynamicsSchedule schedule;
  NoiseModel noise;
  DeviceProfile device;
  /// Back-end compute part of partition p is scaled by a fixed factor drawn
  /// from [1 - eps, 1]; 0 keeps the ground truth exactly linear.
  double nonlinear_eps = 0.0;
};

class Environment {
 public:
  Environment(EnvConfig cfg, std::vector<ContextVector> contexts, std::uint64_t seed)
      : cfg_(std::move(cfg)), contexts_(std::move(contexts)), seed_(seed) {
    cfg_.schedule.validate();
    if (!(cfg_.noise.sigma_ms >= 0.0) || !(cfg_.noise.truncation > 0.0)) {
      throw SchemaError("env.noise_sigma_ms", "noise sigma must be >= 0 with positive truncation");
    }
    if (!(cfg_.nonlinear_eps >= 0.0 && cfg_.nonlinear_eps < 1.0)) {
      throw SchemaError("env.nonlinear_eps", "must lie in [0, 1)");
    }
    if (contexts_.size() < 2) throw std::invalid_argument("environment needs P >= 1");
    perturb_.assign(contexts_.size(), 1.0);
    if (cfg_.nonlinear_eps > 0.0) {
      for (std::size_t p = 0; p < perturb_.size(); ++p) {
        auto eng = detail::make_engine(seed_, {kPerturbTag, p});
        perturb_[p] = 1.0 - cfg_.nonlinear_eps * detail::uniform01(eng);
      }
    }
  }

  const EnvConfig& config() const { return cfg_; }
  const std::vector<ContextVector>& contexts() const { return contexts_; }
  int on_device_index() const { return static_cast<int>(contexts_.size()) - 1; }
  std::uint64_t seed() const { return seed_; }

  /// Markov state (0 = A, 1 = B) in force at frame t. The chain starts in A and
  /// flips at frame t >= 2 with probability P_f using a per-frame seeded draw.
  int markov_state(int t) {
    check_frame(t);
    if (markov_path_.empty()) markov_path_.push_back(0);
    while (static_cast<int>(markov_path_.size()) < t) {
      const auto next_t = static_cast<std::uint64_t>(markov_path_.size() + 1);
      auto eng = detail::make_engine(seed_, {kMarkovTag, next_t});
      const bool flip = detail::uniform01(eng) < cfg_.schedule.markov.switch_prob;
      const int prev = markov_path_.back();
      markov_path_.push_back(flip ? 1 - prev : prev);
    }
    return markov_path_[static_cast<std::size_t>(t - 1)];
  }

  ThetaVector true_theta(int t) {
    check_frame(t);
    const auto& s = cfg_.schedule;
    switch (s.mode) {
      case DynamicsMode::stationary: return s.stationary;
      case DynamicsMode::step_sequence: {
        auto it = std::upper_bound(s.steps.begin(), s.steps.end(), t,
                                   [](int frame, const StepSegment& seg) { return frame < seg.start_frame; });
        return std::prev(it)->theta;
      }
      case DynamicsMode::markov_switch:
        return markov_state(t) == 0 ? s.markov.state_a : s.markov.state_b;
    }
    return s.stationary;
  }

  /// theta*(t)^T x, exactly linear in x.
  double expected_edge_delay(const ContextVector& x, int t) { return true_theta(t).dot(x); }

  /// Noise-free edge delay of partition p, including the optional
  /// per-partition compute perturbation.
  double expected_edge_delay_at(int p, int t) {
    check_partition(p);
    const ThetaVector th = true_theta(t);
    const ContextVector& x = contexts_[static_cast<std::size_t>(p)];
    const double compute = th.head<6>().dot(x.head<6>());
    return perturb_[static_cast<std::size_t>(p)] * compute + th[kPsiMb] * x[kPsiMb];
  }

  /// Observed edge delay, or nullopt for pure on-device processing. The draw
  /// depends only on (seed, t, p).
  std::optional<double> observe(int p, int t) {
    check_partition(p);
    if (p == on_device_index()) return std::nullopt;
    const double mean = expected_edge_delay_at(p, t);
    auto eng = detail::make_engine(seed_, {kNoiseTag, static_cast<std::uint64_t>(t),
                                           static_cast<std::uint64_t>(p)});
    const double z = detail::truncated_standard_normal(eng, cfg_.noise.truncation);
    return std::max(0.0, mean + cfg_.noise.sigma_ms * z);
  }

 private:
  static constexpr std::uint64_t kNoiseTag = 0x6e6f697365ULL;
  static constexpr std::uint64_t kMarkovTag = 0x6d61726b6f76ULL;
  static constexpr std::uint64_t kPerturbTag = 0x7065727475ULL;

  static void check_frame(int t) {
    if (t < 1) throw std::out_of_range("frame index must be >= 1");
  }
  void check_partition(int p) const {
    if (p < 0 || p > on_device_index()) throw std::out_of_range("partition index out of range");
  }

  EnvConfig cfg_;
  std::vector<ContextVector> contexts_;
  std::uint64_t seed_;
  std::vector<double> perturb_;
  std::vector<int> markov_path_;
};

}  // namespace ans
