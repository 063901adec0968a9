#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rpf/agent/dqn.hpp"
#include "rpf/agent/ensemble.hpp"
#include "rpf/agent/learner.hpp"
#include "rpf/env/types.hpp"
#include "rpf/harness/evaluation.hpp"

namespace rpf::harness {

enum class AgentKind { kRpf, kDqn, kHeuristic };

std::string_view to_string(AgentKind kind);
AgentKind agent_kind_from_string(std::string_view name);

struct SessionConfig {
  AgentKind agent = AgentKind::kRpf;
  std::string profile = "desk";
  std::uint64_t seed = 0;
  std::uint64_t total_steps = 100000;  // environment steps
  std::uint64_t eval_interval = 10000;
  std::size_t eval_episodes = 20;
  env::ScenarioConfig scenario;  // training and evaluation traffic (seed unused)
  agent::EnsembleConfig ensemble;
  agent::DqnConfig dqn;
  std::uint64_t loss_log_interval = 100;  // training iterations per loss row
  std::size_t eval_threads = 1;
};

/// Small run: 3 members, 12 vehicles, 100k steps, 20 test episodes.
SessionConfig desk_profile();
/// Full-size run: 10 members, 25 vehicles, 5M steps, 100 test episodes.
SessionConfig paper_profile();
SessionConfig profile_config(std::string_view name);

std::string session_to_json(const SessionConfig& config);
SessionConfig session_from_json(const std::string& text);

std::unique_ptr<agent::Learner> make_learner(const SessionConfig& config);

/// Learner restored from a checkpoint_<step> directory, with the session
/// configuration it was trained under.
struct LoadedCheckpoint {
  SessionConfig config;
  std::uint64_t env_steps = 0;
  std::unique_ptr<agent::Learner> learner;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir, bool restore_replay = false);

/// Loads <out>/baseline.csv, or computes and writes it when absent.
Baseline session_baseline(const SessionConfig& config, const std::filesystem::path& out_dir);

/// Trains from scratch into out_dir: every eval_interval environment steps
/// (and once more at total_steps if that is off the grid) the frozen agent
/// is evaluated greedily on the fixed suite, a metrics.csv row is appended
/// and checkpoint_<step>/ is written. Only the newest checkpoint keeps the
/// replay memory. Returns every evaluation of the session.
std::vector<EvaluationResult> run_training_session(const SessionConfig& config,
                                                   const std::filesystem::path& out_dir,
                                                   std::ostream* progress = nullptr);

/// Continues a session from one of its checkpoints (which must hold the
/// replay memory). Output files are cut back to their state at that
/// checkpoint, so the result matches an uninterrupted run. total_steps
/// overrides the configured length; out_dir defaults to the checkpoint's
/// parent directory.
std::vector<EvaluationResult> resume_training_session(
    const std::filesystem::path& checkpoint, std::optional<std::uint64_t> total_steps = {},
    std::optional<std::filesystem::path> out_dir = {}, std::ostream* progress = nullptr);

}  // namespace rpf::harness
