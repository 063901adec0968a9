#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include "rpf/agent/ensemble.hpp"
#include "rpf/agent/learner.hpp"
#include "rpf/agent/replay.hpp"
#include "rpf/nn/adam.hpp"
#include "rpf/nn/network.hpp"
#include "rpf/rng.hpp"

namespace rpf::agent {

struct DqnConfig {
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::uint64_t epsilon_steps = 1000000;  // environment steps of linear annealing
  std::size_t replay_capacity = 500000;
  std::uint64_t learning_start = 50000;
  std::uint64_t target_update = 20000;
  LearningParams learning;
  nn::NetworkShape shape;

  friend bool operator==(const DqnConfig&, const DqnConfig&) = default;
};

/// Linear from epsilon_start at step 0 to epsilon_end at epsilon_steps, then flat.
double epsilon(const DqnConfig& config, std::uint64_t step);

/// Double DQN with an annealed epsilon-greedy behaviour policy. Uses the
/// same derived random streams as ensemble member 0, so a one-member
/// ensemble without prior reproduces it exactly.
class DqnAgent final : public Learner {
 public:
  DqnAgent(const DqnConfig& config, std::uint64_t seed);

  const DqnConfig& config() const { return config_; }
  const nn::NetworkParams& online() const { return online_; }
  nn::NetworkParams& online() { return online_; }
  const nn::NetworkParams& target() const { return target_; }
  nn::NetworkParams& target() { return target_; }
  const nn::AdamState& optimizer() const { return optimizer_; }
  const SharedReplayMemory& replay() const { return replay_; }

  /// Uniformly random action with probability eps, else greedy on the online net.
  std::size_t select_action(const Observation& obs, double eps, Rng& rng) const;
  /// Double-DQN target for one experience.
  double td_target(const Experience& e) const;
  /// One Adam step on the batch-mean Huber loss; returns the loss.
  double train_step(std::span<const Experience* const> batch);
  /// Samples a minibatch and trains; empty when the memory is not ready.
  std::optional<double> train_from_replay();

  // Learner
  std::string kind() const override { return "dqn"; }
  void begin_episode() override {}
  std::optional<std::size_t> active_member() const override { return std::nullopt; }
  std::size_t training_action(const Observation& obs, std::uint64_t env_step) override;
  void store(Experience e) override;
  std::vector<std::optional<double>> after_step(std::uint64_t env_steps) override;
  std::size_t greedy_action(const Observation& obs) const override;
  std::uint64_t training_steps() const override { return training_steps_; }
  void save(const std::filesystem::path& dir, bool with_replay) const override;
  void load(const std::filesystem::path& dir, bool restore_replay) override;

 private:
  DqnConfig config_;
  nn::NetworkParams online_;
  nn::NetworkParams target_;
  nn::AdamState optimizer_;
  SharedReplayMemory replay_;
  Rng mask_rng_;
  Rng sample_rng_;
  Rng explore_rng_;
  std::uint64_t training_steps_ = 0;
  nn::ForwardCache cache_;
  nn::NetworkParams gradient_;
};

}  // namespace rpf::agent
