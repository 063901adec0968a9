#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rpf/agent/learner.hpp"
#include "rpf/env/highway.hpp"
#include "rpf/env/types.hpp"
#include "rpf/rng.hpp"

namespace rpf::agent {

/// CSV rows: training_step,episode,member_k,loss_mean,episode_return.
/// Loss rows leave episode_return empty, episode rows leave loss_mean empty;
/// member_k is empty for single-network agents.
class TrainingLog {
 public:
  explicit TrainingLog(std::ostream& out, bool write_header = true);

  void loss(std::uint64_t training_step, std::uint64_t episode, std::optional<std::size_t> member,
            double loss_mean);
  void episode(std::uint64_t training_step, std::uint64_t episode,
               std::optional<std::size_t> member, double episode_return);

 private:
  std::ostream& out_;
};

/// Mean loss per member over the current logging window.
struct LossWindow {
  std::vector<double> sum;
  std::vector<std::uint64_t> count;
};

/// Runs training episodes for a Learner.
///
/// Every episode draws a fresh scenario seed; the learner chooses its
/// behaviour (the ensemble commits to one member). After each step the
/// transition is stored unless the episode ended without a crash (the
/// agent is meant to believe episodes continue), then the learner trains.
class Trainer {
 public:
  Trainer(Learner& learner, const env::Highway& highway, env::ScenarioConfig scenario,
          std::uint64_t seed, std::uint64_t loss_log_interval = 100);

  void set_log(TrainingLog* log) { log_ = log; }

  /// Steps the environment until env_steps() == target. Episodes may span calls.
  void run_until(std::uint64_t target);

  std::uint64_t env_steps() const { return env_steps_; }
  std::uint64_t episodes() const { return episodes_; }
  std::uint64_t stored() const { return stored_; }

  /// Everything needed to continue bit-exactly (the learner saves itself).
  std::string save_state() const;
  void restore_state(const std::string& json);

 private:
  void flush_losses();

  Learner& learner_;
  const env::Highway& highway_;
  env::ScenarioConfig scenario_;
  std::uint64_t loss_log_interval_;
  TrainingLog* log_ = nullptr;

  Rng episode_rng_;
  std::optional<env::TrafficState> state_;
  double episode_return_ = 0.0;
  std::uint64_t env_steps_ = 0;
  std::uint64_t episodes_ = 0;
  std::uint64_t stored_ = 0;
  LossWindow window_;
};

}  // namespace rpf::agent
