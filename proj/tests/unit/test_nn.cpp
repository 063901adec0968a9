#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "rpf/error.hpp"
#include "rpf/nn/adam.hpp"
#include "rpf/nn/checkpoint.hpp"
#include "rpf/nn/loss.hpp"
#include "rpf/nn/network.hpp"
#include "support/fixtures.hpp"

using namespace rpf;
using namespace rpf::nn;

TEST_CASE("init_network is deterministic and respects the fan-in bound") {
  Rng a(42), b(42);
  const auto p = init_network(a);
  const auto q = init_network(b);
  CHECK(p == q);
  CHECK(fingerprint(p) == fingerprint(q));

  for (std::size_t t = 0; t < kTensorCount; ++t) {
    const auto& layout = p.layouts()[t];
    const auto values = p.tensor(static_cast<Tensor>(t));
    if (layout.name.find("bias") != std::string_view::npos) {
      CHECK(std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; }));
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(layout.rows + layout.cols));
      CHECK(bound < std::sqrt(6.0 / static_cast<double>(layout.rows)));
      CHECK(std::all_of(values.begin(), values.end(),
                        [&](double v) { return std::abs(v) <= bound; }));
      CHECK(*std::max_element(values.begin(), values.end()) > 0.5 * bound);
    }
  }
}

TEST_CASE("zeroed filters make the output independent of the vehicle inputs") {
  Rng rng(3);
  auto p = init_network(rng);
  for (double& v : p.tensor(Tensor::kConv1Weight)) v = 0.0;
  Observation a = testing::random_observation(rng, 5);
  Observation b = a;
  for (std::size_t i = kEgoFeatures; i < b.values.size(); ++i) b.values[i] = rng.uniform(-1, 1);
  CHECK(forward(p, a) == forward(p, b));
}

TEST_CASE("forward is invariant to vehicle ordering") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = testing::random_params(rng);
    const std::size_t n = 1 + rng.uniform_index(12);
    Observation obs = testing::random_observation(rng, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    Observation shuffled = obs;
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(obs.values.begin() + kEgoFeatures + order[i] * kVehicleFeatures, kVehicleFeatures,
                  shuffled.values.begin() + kEgoFeatures + i * kVehicleFeatures);
    }
    CHECK(forward(p, obs) == forward(p, shuffled));
  }
}

TEST_CASE("empty road takes the pool floor path") {
  Rng rng(11);
  const auto p = testing::random_params(rng);
  Observation obs{{0.2, -0.5, 0.0}};
  ForwardCache cache;
  const auto q = forward(p, obs, cache);
  for (double v : q) CHECK(std::isfinite(v));
  for (std::size_t f = 0; f < p.shape().conv_filters; ++f) {
    CHECK(cache.merged[kEgoFeatures + f] == 0.0);
  }
}

TEST_CASE("malformed observations are rejected") {
  Rng rng(1);
  const auto p = init_network(rng);
  CHECK_THROWS_AS(forward(p, Observation{{0.0, 0.0}}), InputShapeError);
  CHECK_THROWS_AS(forward(p, Observation{{0.0, 0.0, 0.0, 1.0, 1.0}}), InputShapeError);
}

TEST_CASE("dueling combine") {
  Rng rng(5);
  auto p = testing::random_params(rng);
  const Observation obs = testing::random_observation(rng, 4);

  SUBCASE("mean advantage is removed") {
    ForwardCache cache;
    const auto q = forward(p, obs, cache);
    double mean = 0.0;
    for (double v : q) mean += v - cache.value;
    CHECK(std::abs(mean / kNumActions) < 1e-12);
  }
  SUBCASE("constant advantage collapses to the state value") {
    for (double& w : p.tensor(Tensor::kAdvantageWeight)) w = 0.0;
    for (double& b : p.tensor(Tensor::kAdvantageBias)) b = 3.25;
    ForwardCache cache;
    const auto q = forward(p, obs, cache);
    for (double v : q) CHECK(v == doctest::Approx(cache.value).epsilon(1e-15));
  }
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(2024);
  int checked = 0;
  while (checked < 10) {
    const auto p = testing::random_params(rng);
    const auto obs = testing::random_observation(rng, rng.uniform_index(5));
    const std::size_t action = rng.uniform_index(kNumActions);
    const auto numeric = testing::checked_finite_difference(p, obs, action);
    if (numeric.straddles_kink) continue;
    const auto analytic = backward(p, obs, action, 1.0);
    CHECK(testing::max_relative_error(analytic, numeric.gradient) < 1e-4);
    ++checked;
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  Rng rng(9);
  const auto p = testing::random_params(rng);
  const auto g = backward(p, testing::random_observation(rng, 3), 4, 0.0);
  for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("advantage rows of other actions see -1/10 of the hidden activation") {
  Rng rng(13);
  const auto p = testing::random_params(rng);
  const auto obs = testing::random_observation(rng, 3);
  ForwardCache cache;
  forward(p, obs, cache);
  const std::size_t a = 2;
  const auto g = backward(p, obs, a, 1.0);
  const auto gw = g.tensor(Tensor::kAdvantageWeight);
  const std::size_t hidden = p.shape().hidden_units;
  for (std::size_t h = 0; h < hidden; ++h) {
    for (std::size_t b = 0; b < kNumActions; ++b) {
      const double expected = (b == a ? 0.9 : -0.1) * cache.hidden2[h];
      CHECK(gw[h * kNumActions + b] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("huber loss closed forms") {
  CHECK(huber_loss(0.0, 10.0).loss == 0.0);
  CHECK(huber_loss(0.0, 10.0).derivative == 0.0);
  CHECK(huber_loss(1.0, 10.0).loss == doctest::Approx(0.5));
  CHECK(huber_loss(1.0, 10.0).derivative == doctest::Approx(1.0));
  CHECK(huber_loss(20.0, 10.0).loss == doctest::Approx(150.0));
  CHECK(huber_loss(20.0, 10.0).derivative == doctest::Approx(10.0));
  CHECK(huber_loss(-20.0, 10.0).derivative == doctest::Approx(-10.0));
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double e = rng.uniform(-1e3, 1e3);
    CHECK(std::abs(huber_loss(e, 10.0).derivative) <= 10.0);
  }
}

TEST_CASE("adam") {
  Rng rng(17);
  const auto start = init_network(rng);

  SUBCASE("first step moves each weight by about eta against the gradient sign") {
    auto params = start;
    AdamState state(params.shape());
    NetworkParams grad(params.shape());
    for (double& g : grad.values()) g = rng.uniform(-2.0, 2.0);
    adam_step(params, state, grad, 5e-4);
    CHECK(state.step_count == 1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double moved = params.values()[i] - start.values()[i];
      const double g = grad.values()[i];
      CHECK(moved == doctest::Approx(-5e-4 * g / (std::abs(g) + 1e-8)).epsilon(1e-9));
    }
  }
  SUBCASE("zero gradient with zero moments leaves parameters unchanged") {
    auto params = start;
    AdamState state(params.shape());
    adam_step(params, state, NetworkParams(params.shape()), 5e-4);
    CHECK(params == start);
    CHECK(state.step_count == 1);
  }
  SUBCASE("identical calls give identical results") {
    NetworkParams grad(start.shape());
    for (double& g : grad.values()) g = rng.uniform(-1.0, 1.0);
    auto p1 = start, p2 = start;
    AdamState s1(start.shape()), s2(start.shape());
    adam_step(p1, s1, grad, 1e-3);
    adam_step(p2, s2, grad, 1e-3);
    CHECK(p1 == p2);
    CHECK(s1 == s2);
  }
  SUBCASE("shape mismatch is an error") {
    auto params = start;
    AdamState state(params.shape());
    CHECK_THROWS_AS(adam_step(params, state, NetworkParams(NetworkShape{16, 64}), 1e-3),
                    std::invalid_argument);
    CHECK_THROWS_AS(adam_step(params, state, NetworkParams(params.shape()), 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(99);
  const auto p = testing::random_params(rng);
  std::stringstream buffer;
  write_network(buffer, p);
  CHECK(read_network(buffer) == p);

  AdamState state(p.shape());
  NetworkParams grad(p.shape());
  for (double& g : grad.values()) g = rng.uniform(-1, 1);
  auto q = p;
  adam_step(q, state, grad, 1e-3);
  std::stringstream adam_buffer;
  write_adam(adam_buffer, state);
  CHECK(read_adam(adam_buffer) == state);

  std::stringstream bad("NOTANET!garbage");
  CHECK_THROWS_AS(read_network(bad), FormatError);
}
