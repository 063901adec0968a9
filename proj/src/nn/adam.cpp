#include "rpf/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace rpf::nn {

void adam_step(NetworkParams& params, AdamState& state, const NetworkParams& gradient,
               double learning_rate) {
  if (!(params.shape() == gradient.shape()) || !(params.shape() == state.first_moment.shape()) ||
      !(params.shape() == state.second_moment.shape())) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adam_step: learning rate must be > 0");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  auto theta = params.values();
  auto m = state.first_moment.values();
  auto v = state.second_moment.values();
  const auto g = gradient.values();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace rpf::nn
