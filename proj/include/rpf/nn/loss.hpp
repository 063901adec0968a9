#pragma once

#include <algorithm>
#include <cmath>

namespace rpf::nn {

struct HuberResult {
  double loss = 0.0;
  double derivative = 0.0;  // d loss / d error
};

/// Quadratic for |error| <= delta, linear beyond; the derivative is the
/// error clipped to [-delta, delta].
inline HuberResult huber_loss(double error, double delta) {
  const double magnitude = std::abs(error);
  if (magnitude <= delta) return {0.5 * error * error, error};
  return {delta * (magnitude - 0.5 * delta), std::clamp(error, -delta, delta)};
}

}  // namespace rpf::nn
