#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rpf/agent/replay.hpp"
#include "rpf/types.hpp"

namespace rpf::agent {

/// What the training loop needs from an agent.
class Learner {
 public:
  virtual ~Learner() = default;

  /// "rpf" or "dqn"; recorded in checkpoints.
  virtual std::string kind() const = 0;

  /// Called before the first step of every training episode.
  virtual void begin_episode() = 0;
  /// Ensemble member driving the current episode, if any.
  virtual std::optional<std::size_t> active_member() const = 0;
  /// Exploratory action; env_step counts environment steps taken so far.
  virtual std::size_t training_action(const Observation& obs, std::uint64_t env_step) = 0;
  virtual void store(Experience e) = 0;
  /// Called after every environment step with the updated step count.
  /// Returns one loss per member (empty entries: no update happened).
  virtual std::vector<std::optional<double>> after_step(std::uint64_t env_steps) = 0;
  /// Deterministic test-time action.
  virtual std::size_t greedy_action(const Observation& obs) const = 0;
  virtual std::uint64_t training_steps() const = 0;

  /// Writes/reads networks, optimizer state, random streams and counters.
  virtual void save(const std::filesystem::path& dir, bool with_replay) const = 0;
  /// With restore_replay false only the networks and counters are needed
  /// (evaluation); resuming training requires the stored replay memory.
  virtual void load(const std::filesystem::path& dir, bool restore_replay) = 0;
};

}  // namespace rpf::agent
