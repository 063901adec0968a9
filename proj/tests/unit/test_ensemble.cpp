#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "rpf/agent/ensemble.hpp"
#include "rpf/error.hpp"
#include "rpf/nn/loss.hpp"
#include "support/ensemble_fixtures.hpp"
#include "support/fixtures.hpp"

using namespace rpf;
using namespace rpf::agent;
using rpf::testing::constant_network;
using rpf::testing::random_observation;
using rpf::testing::random_params;
using rpf::testing::plus_scaled;
using rpf::testing::pointers;
using rpf::testing::random_batch;
using rpf::testing::random_member;
using rpf::testing::reference_loss;

namespace {

constexpr double kBeta = 50.0;

}  // namespace

TEST_CASE("member_q adds the scaled prior") {
  Rng rng(1);
  const EnsembleMember m = random_member(rng);
  const Observation obs = random_observation(rng, 4);

  CHECK(member_q(m, 0.0, obs) == nn::forward(m.trainable, obs));

  EnsembleMember zero = m;
  zero.trainable.fill(0.0);
  const QVector prior = nn::forward(m.prior, obs);
  const QVector q0 = member_q(zero, kBeta, obs);
  for (std::size_t a = 0; a < kNumActions; ++a) CHECK(q0[a] == doctest::Approx(kBeta * prior[a]));

  const QVector f = nn::forward(m.trainable, obs);
  const QVector q = member_q(m, kBeta, obs);
  for (std::size_t a = 0; a < kNumActions; ++a) {
    CHECK(q[a] == doctest::Approx(f[a] + 50.0 * prior[a]).epsilon(1e-14));
  }
}

TEST_CASE("training action selection") {
  EnsembleConfig config;
  config.members = 3;
  config.replay_capacity = 100;
  EnsembleAgent agent(config, 7);
  Rng rng(2);
  const Observation obs = random_observation(rng, 3);

  SUBCASE("ties resolve to action 0") {
    for (std::size_t k = 0; k < 3; ++k) {
      agent.member(k).trainable = constant_network(1.0, {});
      agent.member(k).prior = constant_network(-2.0, {});
      CHECK(agent.select_training_action(k, obs) == 0);
    }
  }
  SUBCASE("unique maximum") {
    QVector adv{};
    adv[7] = 1.0;
    agent.member(1).trainable = constant_network(0.0, adv);
    agent.member(1).prior.fill(0.0);
    CHECK(agent.select_training_action(1, obs) == 7);
  }
  SUBCASE("each member is greedy on its own values") {
    for (std::size_t k = 0; k < 3; ++k) {
      const QVector q = agent.member_q(k, obs);
      const std::size_t a = agent.select_training_action(k, obs);
      for (std::size_t b = 0; b < kNumActions; ++b) CHECK(q[a] >= q[b]);
    }
  }
}

TEST_CASE("zero TD error leaves the weights alone") {
  EnsembleMember m;
  m.trainable = constant_network(-10.0, {});
  m.target = m.trainable;
  m.prior = constant_network(0.0, {});
  Rng rng(4);
  std::vector<Experience> batch = random_batch(rng, 32);
  for (Experience& e : batch) {
    e.terminal = true;
    e.reward = -10.0;
  }
  const nn::NetworkParams before = m.trainable;
  UpdateScratch scratch;
  const double loss = train_step_member(m, kBeta, pointers(batch), {}, scratch);
  CHECK(loss == 0.0);
  CHECK(m.trainable == before);
  CHECK(m.optimizer.step_count == 1);
}

TEST_CASE("update matches an independently written Double-DQN step") {
  const LearningParams lp;
  for (double beta : {0.0, kBeta}) {
    for (int trial = 0; trial < 5; ++trial) {
      Rng rng(100 + trial);
      EnsembleMember m = random_member(rng);
      std::vector<Experience> batch = random_batch(rng, 1);
      batch[0].terminal = trial == 4;
      const Experience& e = batch[0];

      // Reference: target from the definition, gradient from the
      // single-output backward API, Adam written out for t = 1.
      double y = e.reward;
      if (!e.terminal) {
        const QVector pn = nn::forward(m.prior, e.next_observation);
        const QVector on = plus_scaled(nn::forward(m.trainable, e.next_observation), pn, beta);
        const QVector tn = plus_scaled(nn::forward(m.target, e.next_observation), pn, beta);
        y += lp.gamma * tn[argmax(on)];
      }
      const double q = nn::forward(m.trainable, e.observation)[e.action] +
                       beta * nn::forward(m.prior, e.observation)[e.action];
      const double dloss_dq = -nn::huber_loss(y - q, lp.huber_delta).derivative;
      const nn::NetworkParams g = nn::backward(m.trainable, e.observation, e.action, dloss_dq);
      nn::NetworkParams expected = m.trainable;
      for (std::size_t i = 0; i < expected.size(); ++i) {
        const double gi = g.values()[i];
        const double m_hat = (0.1 * gi) / (1.0 - 0.9);
        const double v_hat = (0.001 * gi * gi) / (1.0 - 0.999);
        expected.values()[i] -= lp.learning_rate * m_hat / (std::sqrt(v_hat) + 1e-8);
      }

      const nn::NetworkParams prior_before = m.prior;
      UpdateScratch scratch;
      train_step_member(m, beta, pointers(batch), lp, scratch);
      CHECK(testing::max_relative_error(m.trainable, expected, 1e-9) < 1e-9);
      CHECK(m.prior == prior_before);
    }
  }
}

TEST_CASE("gradient flows only through the trainable network") {
  const LearningParams lp;
  Rng rng(31);
  EnsembleMember m = random_member(rng);
  std::vector<Experience> batch = random_batch(rng, 4);
  const double base_loss = reference_loss(m, kBeta, batch, lp);

  // A different prior changes the loss ...
  EnsembleMember perturbed = m;
  for (double& w : perturbed.prior.values()) w += rng.uniform(-0.05, 0.05);
  const double perturbed_loss = reference_loss(perturbed, kBeta, batch, lp);
  CHECK(perturbed_loss != base_loss);

  // ... but the computed gradient is exactly the derivative with respect to
  // the trainable weights with the prior held fixed.
  UpdateScratch scratch;
  EnsembleMember work = perturbed;
  train_step_member(work, kBeta, pointers(batch), lp, scratch);
  CHECK(work.prior == perturbed.prior);
  CHECK(work.target == perturbed.target);

  // The loss is O(100) with beta = 50, so a larger step keeps round-off in
  // the difference quotient well below the tolerance.
  const double h = 1e-4;
  int checked = 0;
  double worst = 0.0;
  for (int n = 0; n < 300; ++n) {
    const std::size_t i = rng.uniform_index(perturbed.trainable.size());
    EnsembleMember probe = perturbed;
    probe.trainable.values()[i] += h;
    const double up = reference_loss(probe, kBeta, batch, lp);
    probe.trainable.values()[i] -= 2.0 * h;
    const double down = reference_loss(probe, kBeta, batch, lp);
    const double fd = (up - down) / (2.0 * h);
    const double analytic = scratch.gradient.values()[i];
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-5});
    worst = std::max(worst, std::abs(fd - analytic) / denom);
    ++checked;
  }
  CHECK(checked == 300);
  CHECK(worst < 1e-4);
}

TEST_CASE("priors stay frozen and targets follow the sync schedule") {
  EnsembleConfig config;
  config.members = 3;
  config.replay_capacity = 1000;
  config.learning_start = 0;
  config.target_update = 25;
  config.learning.batch_size = 8;
  EnsembleAgent agent(config, 11);
  std::vector<std::uint64_t> prior_hash;
  for (std::size_t k = 0; k < 3; ++k) prior_hash.push_back(nn::fingerprint(agent.member(k).prior));

  Rng rng(12);
  for (const Experience& e : random_batch(rng, 200)) agent.add_experience(e);

  std::vector<nn::NetworkParams> snapshot;
  for (std::size_t k = 0; k < 3; ++k) snapshot.push_back(agent.member(k).trainable);
  const std::vector<nn::NetworkParams> initial = snapshot;
  for (int step = 1; step <= 1000; ++step) {
    const auto losses = agent.train_all();
    REQUIRE(losses.size() == 3);
    for (const auto& l : losses) REQUIRE(l.has_value());
    if (step % 25 == 0) {
      for (std::size_t k = 0; k < 3; ++k) {
        REQUIRE(agent.member(k).target == agent.member(k).trainable);
        snapshot[k] = agent.member(k).trainable;
      }
    } else {
      for (std::size_t k = 0; k < 3; ++k) REQUIRE(agent.member(k).target == snapshot[k]);
    }
  }
  CHECK(agent.training_steps() == 1000);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(nn::fingerprint(agent.member(k).prior) == prior_hash[k]);
    CHECK_FALSE(agent.member(k).trainable == initial[k]);  // training did move the weights
  }
}

TEST_CASE("members without enough samples skip their update") {
  EnsembleConfig config;
  config.members = 2;
  config.replay_capacity = 100;
  config.learning_start = 0;
  config.learning.batch_size = 4;
  config.p_add = 0.0;
  EnsembleAgent agent(config, 3);
  Rng rng(1);
  for (const Experience& e : random_batch(rng, 10)) agent.add_experience(e);
  CHECK(agent.replay().size() == 10);
  const auto losses = agent.train_all();
  CHECK_FALSE(losses[0].has_value());
  CHECK_FALSE(losses[1].has_value());
  CHECK(agent.member(0).optimizer.step_count == 0);
  CHECK(agent.training_steps() == 1);
}

TEST_CASE("episode member choice is uniform") {
  EnsembleConfig config;
  config.replay_capacity = 10;
  EnsembleAgent agent(config, 99);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) {
    agent.begin_episode();
    ++counts[*agent.active_member()];
  }
  for (int c : counts) {
    CHECK(c >= 900);
    CHECK(c <= 1100);
  }
}

TEST_CASE("parallel member updates equal sequential ones") {
  EnsembleConfig config;
  config.members = 4;
  config.replay_capacity = 500;
  config.learning_start = 0;
  config.target_update = 7;
  config.learning.batch_size = 8;
  EnsembleConfig threaded = config;
  threaded.threads = 4;
  EnsembleAgent a(config, 5);
  EnsembleAgent b(threaded, 5);
  Rng rng(6);
  for (const Experience& e : random_batch(rng, 100)) {
    a.add_experience(e);
    b.add_experience(e);
  }
  for (int i = 0; i < 30; ++i) CHECK(a.train_all() == b.train_all());
  for (std::size_t k = 0; k < 4; ++k) CHECK(a.member(k) == b.member(k));
}

TEST_CASE("ensemble checkpoints restore the exact agent") {
  EnsembleConfig config;
  config.members = 3;
  config.replay_capacity = 300;
  config.learning_start = 0;
  config.learning.batch_size = 8;
  EnsembleAgent agent(config, 21);
  Rng rng(22);
  for (const Experience& e : random_batch(rng, 60)) agent.add_experience(e);
  for (int i = 0; i < 5; ++i) agent.train_all();
  agent.begin_episode();

  const auto dir = std::filesystem::temp_directory_path() / "rpf_test_ensemble_ckpt";
  std::filesystem::remove_all(dir);
  agent.save(dir, true);
  EnsembleAgent restored(config, 0);
  restored.load(dir, true);
  for (std::size_t k = 0; k < 3; ++k) CHECK(restored.member(k) == agent.member(k));
  CHECK(restored.replay() == agent.replay());
  CHECK(restored.active_member() == agent.active_member());
  CHECK(restored.training_steps() == agent.training_steps());
  // Identical random streams: the next updates agree too.
  for (int i = 0; i < 3; ++i) CHECK(restored.train_all() == agent.train_all());

  EnsembleConfig other = config;
  other.members = 2;
  EnsembleAgent mismatched(other, 0);
  CHECK_THROWS_AS(mismatched.load(dir, true), ConfigError);

  const auto light = dir / "light";
  agent.save(light, false);
  EnsembleAgent eval_only(config, 0);
  CHECK_NOTHROW(eval_only.load(light, false));
  CHECK(eval_only.member(2) == agent.member(2));
  EnsembleAgent resume(config, 0);
  CHECK_THROWS_AS(resume.load(light, true), ConfigError);
  std::filesystem::remove_all(dir);
}
