#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rpf/agent/dqn.hpp"
#include "support/fixtures.hpp"

using namespace rpf;
using namespace rpf::agent;
using rpf::testing::constant_network;
using rpf::testing::random_observation;

TEST_CASE("epsilon schedule") {
  const DqnConfig c;
  CHECK(epsilon(c, 0) == 1.0);
  CHECK(epsilon(c, 1000000) == doctest::Approx(0.05));
  CHECK(epsilon(c, 500000) == doctest::Approx(0.525));
  CHECK(epsilon(c, 5000000) == 0.05);
  double previous = 2.0;
  for (std::uint64_t step = 0; step <= 1200000; step += 1000) {
    const double e = epsilon(c, step);
    REQUIRE(e <= previous);
    previous = e;
  }
}

TEST_CASE("action selection") {
  DqnConfig config;
  config.replay_capacity = 10;
  DqnAgent agent(config, 1);
  Rng rng(2);
  const Observation obs = random_observation(rng, 2);

  QVector adv{};
  adv[3] = 2.0;
  agent.online() = constant_network(0.0, adv);
  CHECK(agent.select_action(obs, 0.0, rng) == 3);

  agent.online() = constant_network(4.0, {});
  CHECK(agent.select_action(obs, 0.0, rng) == 0);

  std::vector<int> counts(kNumActions, 0);
  for (int i = 0; i < 10000; ++i) ++counts[agent.select_action(obs, 1.0, rng)];
  const double sigma = std::sqrt(10000 * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - 1000) < 3.0 * sigma);
}

TEST_CASE("Double-DQN targets by hand") {
  DqnConfig config;
  config.replay_capacity = 10;
  DqnAgent agent(config, 1);
  Rng rng(3);

  // Online net prefers action 4 in s'; the target net values action 4 at
  // 2 + 3 - 0.9 (its own favourite, action 8, is ignored).
  QVector online_adv{};
  online_adv[4] = 1.0;
  QVector target_adv{};
  target_adv[4] = 3.0;
  target_adv[8] = 6.0;
  agent.online() = constant_network(0.0, online_adv);
  agent.target() = constant_network(2.0, target_adv);

  Experience e;
  e.observation = random_observation(rng, 1);
  e.next_observation = random_observation(rng, 2);
  e.reward = 0.5;
  e.action = 1;
  CHECK(agent.td_target(e) == doctest::Approx(0.5 + 0.99 * (2.0 + 3.0 - 0.9)));

  e.terminal = true;
  CHECK(agent.td_target(e) == 0.5);

  // Identical networks: the double estimate equals the max over the target.
  agent.target() = agent.online();
  e.terminal = false;
  const QVector q_next = nn::forward(agent.target(), e.next_observation);
  CHECK(agent.td_target(e) == doctest::Approx(0.5 + 0.99 * *std::max_element(q_next.begin(), q_next.end())));
}

TEST_CASE("zero TD error on terminal samples gives zero loss") {
  DqnConfig config;
  config.replay_capacity = 10;
  DqnAgent agent(config, 1);
  agent.online() = constant_network(-10.0, {});
  Rng rng(4);
  std::vector<Experience> batch(32);
  std::vector<const Experience*> ptrs;
  for (Experience& e : batch) {
    e.observation = random_observation(rng, 3);
    e.next_observation = random_observation(rng, 3);
    e.action = rng.uniform_index(kNumActions);
    e.reward = -10.0;
    e.terminal = true;
    ptrs.push_back(&e);
  }
  const nn::NetworkParams before = agent.online();
  CHECK(agent.train_step(ptrs) == 0.0);
  CHECK(agent.online() == before);
}

TEST_CASE("target sync period and warm-up") {
  DqnConfig config;
  config.replay_capacity = 100;
  config.learning_start = 40;
  config.target_update = 5;
  config.learning.batch_size = 4;
  DqnAgent agent(config, 8);
  Rng rng(9);
  for (std::uint64_t step = 1; step <= 60; ++step) {
    Experience e;
    e.observation = random_observation(rng, 2);
    e.next_observation = random_observation(rng, 2);
    e.action = rng.uniform_index(kNumActions);
    e.reward = rng.uniform(-1.0, 1.0);
    agent.store(e);
    const auto losses = agent.after_step(step);
    if (step < 40) {
      REQUIRE(losses.empty());
      REQUIRE(agent.online() == agent.target());
    } else {
      REQUIRE(losses.size() == 1);
      REQUIRE(losses[0].has_value());
      REQUIRE((agent.training_steps() % 5 == 0) == (agent.online() == agent.target()));
    }
  }
  CHECK(agent.training_steps() == 21);
}

TEST_CASE("DQN checkpoints round-trip") {
  DqnConfig config;
  config.replay_capacity = 100;
  config.learning_start = 0;
  config.learning.batch_size = 4;
  DqnAgent agent(config, 8);
  Rng rng(9);
  for (std::uint64_t step = 1; step <= 20; ++step) {
    Experience e;
    e.observation = random_observation(rng, 2);
    e.next_observation = random_observation(rng, 1);
    e.action = rng.uniform_index(kNumActions);
    agent.store(e);
    agent.after_step(step);
  }
  const auto dir = std::filesystem::temp_directory_path() / "rpf_test_dqn_ckpt";
  std::filesystem::remove_all(dir);
  agent.save(dir, true);
  DqnAgent restored(config, 0);
  restored.load(dir, true);
  CHECK(restored.online() == agent.online());
  CHECK(restored.target() == agent.target());
  CHECK(restored.optimizer() == agent.optimizer());
  CHECK(restored.replay() == agent.replay());
  CHECK(restored.after_step(21) == agent.after_step(21));
  CHECK(restored.online() == agent.online());
  std::filesystem::remove_all(dir);
}
