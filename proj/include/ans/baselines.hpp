#pragma once

// Reference policies: the per-frame Oracle, pure on-device (MO), pure edge
// offloading (EO), and a layer-wise profiler that knows the true uplink cost
// but models edge compute with a single layer-type-blind ms/GMAC rate.

#include <span>
#include <stdexcept>
#include <vector>

#include "ans/bandit_core.hpp"
#include "ans/env_sim.hpp"
#include "ans/model_ingest.hpp"

namespace ans {

/// argmin_p d_f(p) + expected d_e(p) over all of {0..P}; smallest index wins ties.
inline int oracle_select(std::span<const double> expected_total) {
  return argmin_partition(expected_total, false);
}

inline int oracle_select(const ThetaVector& theta, std::span<const ContextVector> contexts,
                         std::span<const double> d_f) {
  if (contexts.size() != d_f.size() || contexts.empty()) {
    throw std::invalid_argument("oracle_select: contexts/d_f size mismatch");
  }
  std::vector<double> total(contexts.size());
  for (std::size_t p = 0; p < contexts.size(); ++p) total[p] = d_f[p] + theta.dot(contexts[p]);
  return oracle_select(total);
}

/// Oracle with privileged access to the environment at frame t.
inline int oracle_select(Environment& env, int t, std::span<const double> d_f) {
  std::vector<double> total(d_f.size());
  for (std::size_t p = 0; p < d_f.size(); ++p) {
    total[p] = d_f[p] + env.expected_edge_delay_at(static_cast<int>(p), t);
  }
  return oracle_select(total);
}

inline int mo_select(int on_device_index) { return on_device_index; }
inline int eo_select() { return 0; }

/// Layer-wise stand-in. Given the true uplink coefficient, it predicts edge
/// delay as rate * (m_conv + m_fc + m_act) + uplink * psi, where `rate` is the
/// least-squares single rate for the true conv/fc/act coefficients weighted by
/// the descriptor's MAC mix. Per-layer fixed costs are not modelled.
struct LayerwiseProfiler {
  double edge_ms_per_gmac = 0.0;
  double uplink_ms_per_mb = 0.0;

  static LayerwiseProfiler fit(const DnnDescriptor& desc, const ThetaVector& theta) {
    double w[3] = {0.0, 0.0, 0.0};
    for (const auto& u : desc.units) {
      switch (u.kind) {
        case LayerKind::conv: w[0] += u.gmacs; break;
        case LayerKind::fc: w[1] += u.gmacs; break;
        case LayerKind::act:
        case LayerKind::other: w[2] += u.gmacs; break;
      }
    }
    const double total = w[0] + w[1] + w[2];
    LayerwiseProfiler prof;
    prof.uplink_ms_per_mb = theta[kPsiMb];
    if (total > 0.0) {
      prof.edge_ms_per_gmac =
          (w[0] * theta[kConvGmacs] + w[1] * theta[kFcGmacs] + w[2] * theta[kActGmacs]) / total;
    } else {
      prof.edge_ms_per_gmac = (theta[kConvGmacs] + theta[kFcGmacs] + theta[kActGmacs]) / 3.0;
    }
    return prof;
  }

  double predict(const ContextVector& x) const {
    return edge_ms_per_gmac * (x[kConvGmacs] + x[kFcGmacs] + x[kActGmacs]) + uplink_ms_per_mb * x[kPsiMb];
  }

  int select(std::span<const ContextVector> contexts, std::span<const double> d_f) const {
    std::vector<double> total(contexts.size());
    for (std::size_t p = 0; p < contexts.size(); ++p) total[p] = d_f[p] + predict(contexts[p]);
    return argmin_partition(total, false);
  }
};

/// Refits the layer-wise model to theta*(t) and returns its choice.
inline int layerwise_select(Environment& env, int t, const DnnDescriptor& desc,
                            std::span<const double> d_f) {
  const auto prof = LayerwiseProfiler::fit(desc, env.true_theta(t));
  return prof.select(env.contexts(), d_f);
}

}  // namespace ans
