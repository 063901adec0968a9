#pragma once

// Test-only helpers: random fixtures and a finite-difference oracle that
// only ever calls forward(), never the analytic backward pass.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "rpf/nn/network.hpp"
#include "rpf/rng.hpp"
#include "rpf/types.hpp"

namespace rpf::testing {

inline Observation random_observation(Rng& rng, std::size_t vehicles) {
  Observation obs;
  obs.values.resize(kEgoFeatures + kVehicleFeatures * vehicles);
  for (double& v : obs.values) v = rng.uniform(-1.0, 1.0);
  return obs;
}

/// Randomizes every parameter (biases included) so no unit sits exactly on a ReLU kink.
inline nn::NetworkParams random_params(Rng& rng, nn::NetworkShape shape = {}) {
  nn::NetworkParams p = nn::init_network(rng, shape);
  for (double& v : p.values()) v += rng.uniform(-0.1, 0.1);
  return p;
}

struct FiniteDifference {
  nn::NetworkParams gradient;
  // Some parameter's +-h stencil crosses a ReLU or max-pool switch: its left
  // and right slopes disagree and the central difference is no reference.
  bool straddles_kink = false;
};

/// Central differences plus a check of the one-sided slopes. Smooth
/// curvature moves them apart by O(h); a kink by O(1).
inline FiniteDifference checked_finite_difference(const nn::NetworkParams& params,
                                                  const Observation& obs, std::size_t action,
                                                  double h = 1e-5, double kink_tol = 1e-3) {
  FiniteDifference fd{nn::NetworkParams(params.shape())};
  nn::NetworkParams work = params;
  const double centre = nn::forward(params, obs)[action];
  auto w = work.values();
  auto g = fd.gradient.values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + h;
    const double up = nn::forward(work, obs)[action];
    w[i] = saved - h;
    const double down = nn::forward(work, obs)[action];
    w[i] = saved;
    g[i] = (up - down) / (2.0 * h);
    const double right = (up - centre) / h;
    const double left = (centre - down) / h;
    if (std::abs(right - left) > kink_tol * std::max({std::abs(right), std::abs(left), 1.0})) {
      fd.straddles_kink = true;
    }
  }
  return fd;
}

/// Largest elementwise relative error, with a floor on the denominator so
/// gradients that are zero on both sides do not divide by zero.
inline double max_relative_error(const nn::NetworkParams& a, const nn::NetworkParams& b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  const auto x = a.values();
  const auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(x[i]), std::abs(y[i]), floor});
    worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
  }
  return worst;
}


/// Network whose output ignores the input: all weights zero, value bias v,
/// advantage biases a. Q(s, .) = v + a - mean(a).
inline nn::NetworkParams constant_network(double v, const QVector& a, nn::NetworkShape shape = {}) {
  nn::NetworkParams p(shape);
  p.fill(0.0);
  p.tensor(nn::Tensor::kValueBias)[0] = v;
  auto adv = p.tensor(nn::Tensor::kAdvantageBias);
  std::copy(a.begin(), a.end(), adv.begin());
  return p;
}

}  // namespace rpf::testing
