#pragma once

#include <cstdint>

#include "rpf/nn/network.hpp"

namespace rpf::nn {

/// Moment estimates for one network plus the optimizer constants.
struct AdamState {
  explicit AdamState(NetworkShape shape = {})
      : first_moment(shape), second_moment(shape) {}

  NetworkParams first_moment;
  NetworkParams second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of params along -gradient.
/// Throws std::invalid_argument if the shapes disagree or the rate is not positive.
void adam_step(NetworkParams& params, AdamState& state, const NetworkParams& gradient,
               double learning_rate);

}  // namespace rpf::nn
