#pragma once

// muLinUCB: online ridge estimation of the edge-delay coefficients,
// frame-weighted lower-confidence partition selection, and forced sampling
// of an offloading partition every ~T^mu frames so that choosing pure
// on-device processing (which yields no feedback) cannot freeze learning.
// The vanilla LinUCB mode drops both the weights and the forcing.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ans/error.hpp"
#include "ans/model_ingest.hpp"

namespace ans {

using Matrix7 = Eigen::Matrix<double, kContextDim, kContextDim>;

enum class LearnerMode { mu_linucb, vanilla_linucb };

struct LearnerConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double mu = 0.25;
  /// Known horizon T; nullopt selects the doubling schedule driven by t0.
  std::optional<int> horizon;
  int t0 = 100;
  double l_key = 0.9;
  double l_nonkey = 0.1;
  LearnerMode mode = LearnerMode::mu_linucb;
  /// Unknown-horizon mode only: clear A and b when a new phase starts.
  bool reset_per_phase = false;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw SchemaError("learner.alpha", "must be >= 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw SchemaError("learner.beta", "must be > 0");
    if (!(mu >= 0.0 && mu < 1.0)) throw SchemaError("learner.mu", "must lie in [0, 1)");
    if (horizon && *horizon < 1) throw SchemaError("learner.horizon", "must be >= 1");
    if (!horizon && t0 < 1) throw SchemaError("learner.t0", "must be >= 1");
    if (!(l_nonkey > 0.0 && l_nonkey < l_key && l_key < 1.0)) {
      throw SchemaError("learner.l_key", "weights must satisfy 0 < l_nonkey < l_key < 1");
    }
  }

  double weight(bool is_key) const { return is_key ? l_key : l_nonkey; }
};

// ---------------------------------------------------------------------------
// Forced sampling

/// F = { round(n * T^mu) : n = 1, 2, ..., round(n * T^mu) <= T }, stored as a
/// membership bitmap over 1..T.
class ForcedSchedule {
 public:
  ForcedSchedule(int horizon, double mu) : horizon_(horizon), mu_(mu) {
    if (horizon < 1) throw std::invalid_argument("forced schedule horizon must be >= 1");
    if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("forced schedule mu must lie in [0, 1)");
    spacing_ = std::pow(static_cast<double>(horizon), mu);
    member_.assign(static_cast<std::size_t>(horizon) + 1, false);
    for (long long n = 1;; ++n) {
      const long long t = std::llround(static_cast<double>(n) * spacing_);
      if (t > horizon) break;
      if (t >= 1 && !member_[static_cast<std::size_t>(t)]) {
        member_[static_cast<std::size_t>(t)] = true;
        ++count_;
      }
    }
  }

  bool contains(int t) const {
    return t >= 1 && t <= horizon_ && member_[static_cast<std::size_t>(t)];
  }
  std::size_t size() const { return count_; }
  int horizon() const { return horizon_; }
  double mu() const { return mu_; }
  /// Nominal gap between forced frames, T^mu.
  double spacing() const { return spacing_; }

  std::vector<int> frames() const {
    std::vector<int> out;
    out.reserve(count_);
    for (int t = 1; t <= horizon_; ++t) {
      if (member_[static_cast<std::size_t>(t)]) out.push_back(t);
    }
    return out;
  }

 private:
  int horizon_;
  double mu_;
  double spacing_ = 1.0;
  std::vector<bool> member_;
  std::size_t count_ = 0;
};

inline ForcedSchedule forced_schedule(int horizon, double mu) { return ForcedSchedule{horizon, mu}; }

/// Position of global frame t inside the doubling schedule: phase i >= 1 has
/// length floor(2^i * t0); `local` is 1-based within the phase.
struct PhasePosition {
  int phase = 1;
  int length = 0;
  int local = 0;
};

inline int phase_length(int phase, int t0) {
  return static_cast<int>(std::floor(std::ldexp(static_cast<double>(t0), phase)));
}

inline PhasePosition phase_of(int t, int t0) {
  if (t < 1) throw std::out_of_range("frame index must be >= 1");
  long long start = 1;
  for (int i = 1;; ++i) {
    const long long len = phase_length(i, t0);
    if (t < start + len) return {i, static_cast<int>(len), static_cast<int>(t - start + 1)};
    start += len;
  }
}

// ---------------------------------------------------------------------------
// Confidence radius from the prediction-error bound

/// alpha = (C_theta + C_eta * sqrt(d * log((1 + M * C_x^2) / delta))) / (1 - L_key)
inline double theoretical_alpha(double c_theta, double c_eta, int d, double m, double delta,
                                double l_key, double c_x = 1.0) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
  if (!(l_key >= 0.0 && l_key < 1.0)) throw std::invalid_argument("L_key must lie in [0, 1)");
  if (d < 1 || m < 0.0 || c_theta < 0.0 || c_eta < 0.0 || c_x < 0.0) {
    throw std::invalid_argument("theoretical_alpha: constants must be non-negative");
  }
  const double log_term = std::log((1.0 + m * c_x * c_x) / delta);
  return (c_theta + c_eta * std::sqrt(static_cast<double>(d) * log_term)) / (1.0 - l_key);
}

// ---------------------------------------------------------------------------
// Learner

struct Selection {
  int partition = 0;
  bool forced = false;
};

/// Index of the smallest score; ties go to the smallest index. With
/// `exclude_last` the final entry (pure on-device processing) is skipped.
inline int argmin_partition(std::span<const double> scores, bool exclude_last) {
  const std::size_t n = exclude_last ? scores.size() - 1 : scores.size();
  if (n == 0) throw std::invalid_argument("argmin over an empty partition set");
  std::size_t best = 0;
  for (std::size_t p = 1; p < n; ++p) {
    if (scores[p] < scores[best]) best = p;
  }
  return static_cast<int>(best);
}

class MuLinUcb {
 public:
  explicit MuLinUcb(LearnerConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    reset();
    if (cfg_.horizon) known_.emplace(*cfg_.horizon, cfg_.mu);
  }

  const LearnerConfig& config() const { return cfg_; }
  const Matrix7& gram() const { return a_; }
  const ContextVector& moment() const { return b_; }
  long long updates_seen() const { return updates_; }

  /// Back to A = beta*I, b = 0.
  void reset() {
    a_ = cfg_.beta * Matrix7::Identity();
    b_.setZero();
    updates_ = 0;
    valid_ = false;
  }

  /// Whether frame t is a forced-sampling frame. Always false in vanilla mode.
  bool is_forced(int t) const {
    if (t < 1) throw std::out_of_range("frame index must be >= 1");
    if (cfg_.mode == LearnerMode::vanilla_linucb) return false;
    if (known_) return known_->contains(t);
    const PhasePosition pos = phase_of(t, cfg_.t0);
    return phase_schedule(pos.phase).contains(pos.local);
  }

  /// theta_hat = A^{-1} b, recomputed lazily after each update.
  const ContextVector& estimate_theta() {
    refresh();
    return theta_;
  }

  double predict(const ContextVector& x) { return estimate_theta().dot(x); }

  /// sqrt(x^T A^{-1} x).
  double confidence_width(const ContextVector& x) {
    refresh();
    return llt_.matrixL().solve(x).norm();
  }

  /// d_f + theta_hat^T x - alpha * sqrt((1 - L) x^T A^{-1} x).
  double ucb_score(const ContextVector& x, double d_f, double weight) {
    if (x.isZero(0.0)) return d_f;
    return d_f + predict(x) - cfg_.alpha * std::sqrt(1.0 - weight) * confidence_width(x);
  }

  /// Chooses p_t for frame t with frame weight L_t. `contexts` and `d_f` are
  /// indexed by partition and the last entry is pure on-device processing.
  Selection select_partition(int t, double weight, std::span<const ContextVector> contexts,
                             std::span<const double> d_f) {
    if (contexts.size() != d_f.size() || contexts.size() < 2) {
      throw std::invalid_argument("select_partition: need matching contexts/d_f with P >= 1");
    }
    enter_frame(t);
    const bool vanilla = cfg_.mode == LearnerMode::vanilla_linucb;
    const double w = vanilla ? 0.0 : weight;
    const bool forced = is_forced(t);
    scores_.resize(contexts.size());
    for (std::size_t p = 0; p < contexts.size(); ++p) scores_[p] = ucb_score(contexts[p], d_f[p], w);
    return {argmin_partition(scores_, forced), forced};
  }

  /// Scores of the last select_partition call.
  std::span<const double> last_scores() const { return scores_; }

  /// Rank-one update for an offloaded frame; a no-op for p = P. An observation
  /// must be present exactly when p != P.
  void update(int p, int on_device_index, const ContextVector& x, std::optional<double> observed) {
    if (p == on_device_index) {
      if (observed) throw std::logic_error("update: pure on-device frame carries no edge delay");
      return;
    }
    if (!observed) throw std::logic_error("update: offloaded frame requires an observed edge delay");
    if (!std::isfinite(*observed) || !x.allFinite()) throw NumericError("update: non-finite sample");
    a_.noalias() += x * x.transpose();
    b_ += x * *observed;
    ++updates_;
    valid_ = false;
  }

 private:
  void refresh() {
    if (valid_) return;
    if (!a_.allFinite() || !b_.allFinite()) throw NumericError("learner state is not finite");
    llt_.compute(a_);
    if (llt_.info() != Eigen::Success) throw NumericError("A is not positive definite");
    theta_ = llt_.solve(b_);
    const double residual = (a_ * theta_ - b_).norm();
    if (!theta_.allFinite() || residual > 1e-8 * (1.0 + b_.norm())) {
      throw NumericError("ridge solve failed to converge");
    }
    valid_ = true;
  }

  void enter_frame(int t) {
    if (cfg_.horizon || !cfg_.reset_per_phase) return;
    const int phase = phase_of(t, cfg_.t0).phase;
    if (phase != current_phase_) {
      if (current_phase_ != 0) reset();
      current_phase_ = phase;
    }
  }

  const ForcedSchedule& phase_schedule(int phase) const {
    while (static_cast<int>(phases_.size()) < phase) {
      const int i = static_cast<int>(phases_.size()) + 1;
      phases_.emplace_back(phase_length(i, cfg_.t0), cfg_.mu);
    }
    return phases_[static_cast<std::size_t>(phase - 1)];
  }

  LearnerConfig cfg_;
  Matrix7 a_;
  ContextVector b_;
  long long updates_ = 0;

  Eigen::LLT<Matrix7> llt_;
  ContextVector theta_ = ContextVector::Zero();
  bool valid_ = false;

  std::optional<ForcedSchedule> known_;
  mutable std::vector<ForcedSchedule> phases_;
  int current_phase_ = 0;
  std::vector<double> scores_;
};

}  // namespace ans
