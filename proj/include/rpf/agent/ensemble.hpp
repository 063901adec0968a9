#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rpf/agent/learner.hpp"
#include "rpf/agent/replay.hpp"
#include "rpf/agent/worker_pool.hpp"
#include "rpf/nn/adam.hpp"
#include "rpf/nn/network.hpp"
#include "rpf/rng.hpp"
#include "rpf/types.hpp"

namespace rpf::agent {

/// Update constants shared by the ensemble and the DQN baseline.
struct LearningParams {
  double gamma = 0.99;
  double huber_delta = 10.0;
  double learning_rate = 5e-4;
  std::size_t batch_size = 32;

  friend bool operator==(const LearningParams&, const LearningParams&) = default;
};

struct EnsembleConfig {
  std::size_t members = 10;
  double prior_scale = 50.0;  // beta
  double p_add = 0.5;
  std::size_t replay_capacity = 500000;
  std::uint64_t learning_start = 50000;  // environment steps before the first update
  std::uint64_t target_update = 20000;   // training iterations between target syncs
  LearningParams learning;
  nn::NetworkShape shape;
  std::size_t threads = 1;  // member updates run on this many threads

  friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

/// Trainable network, its target copy, the frozen prior and the optimizer.
struct EnsembleMember {
  explicit EnsembleMember(nn::NetworkShape shape = {})
      : trainable(shape), target(shape), prior(shape), optimizer(shape) {}

  nn::NetworkParams trainable;
  nn::NetworkParams target;
  nn::NetworkParams prior;
  nn::AdamState optimizer;

  friend bool operator==(const EnsembleMember&, const EnsembleMember&) = default;
};

/// f(s; theta_k) + beta * p(s; prior_k).
QVector member_q(const EnsembleMember& member, double beta, const Observation& obs);

/// Reusable buffers for one member's update.
struct UpdateScratch {
  nn::ForwardCache cache;
  nn::NetworkParams gradient;
};

/// One Double-DQN step on the prior-augmented value of a member:
/// y = r + gamma * (f_target + beta p)(s', argmax_a (f + beta p)(s', a)),
/// y = r for terminal samples. Only f's parameters receive gradients.
/// Returns the batch-mean Huber loss.
double train_step_member(EnsembleMember& member, double beta,
                         std::span<const Experience* const> batch, const LearningParams& params,
                         UpdateScratch& scratch);

class EnsembleAgent final : public Learner {
 public:
  EnsembleAgent(const EnsembleConfig& config, std::uint64_t seed);

  const EnsembleConfig& config() const { return config_; }
  std::size_t size() const { return members_.size(); }
  const EnsembleMember& member(std::size_t k) const { return members_.at(k); }
  EnsembleMember& member(std::size_t k) { return members_.at(k); }
  const SharedReplayMemory& replay() const { return replay_; }

  QVector member_q(std::size_t k, const Observation& obs) const;
  /// member_q for every member, in member order.
  std::vector<QVector> ensemble_q(const Observation& obs) const;
  /// Greedy w.r.t. member k, lowest index on ties.
  std::size_t select_training_action(std::size_t k, const Observation& obs) const;
  /// Greedy w.r.t. the ensemble mean.
  std::size_t mean_greedy_action(const Observation& obs) const;

  std::size_t add_experience(Experience e);
  /// One update for every member that has a full minibatch available; the
  /// entry is empty for members that were not ready. Counts as one training
  /// iteration and syncs targets every target_update iterations.
  std::vector<std::optional<double>> train_all();
  void sync_targets();

  // Learner
  std::string kind() const override { return "rpf"; }
  void begin_episode() override;
  std::optional<std::size_t> active_member() const override { return active_; }
  std::size_t training_action(const Observation& obs, std::uint64_t env_step) override;
  void store(Experience e) override { add_experience(std::move(e)); }
  std::vector<std::optional<double>> after_step(std::uint64_t env_steps) override;
  std::size_t greedy_action(const Observation& obs) const override {
    return mean_greedy_action(obs);
  }
  std::uint64_t training_steps() const override { return training_steps_; }
  void save(const std::filesystem::path& dir, bool with_replay) const override;
  void load(const std::filesystem::path& dir, bool restore_replay) override;

 private:
  EnsembleConfig config_;
  std::vector<EnsembleMember> members_;
  std::vector<UpdateScratch> scratch_;
  SharedReplayMemory replay_;
  Rng mask_rng_;
  Rng choice_rng_;
  std::vector<Rng> sample_rngs_;
  std::optional<std::size_t> active_;
  std::uint64_t training_steps_ = 0;
  std::unique_ptr<WorkerPool> pool_;
};

}  // namespace rpf::agent
