#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rpf/agent/ensemble.hpp"
#include "rpf/agent/learner.hpp"
#include "rpf/env/highway.hpp"
#include "rpf/env/types.hpp"
#include "rpf/safety/uncertainty.hpp"

namespace rpf::harness {

/// Discount used for episode returns in evaluation.
inline constexpr double kReturnDiscount = 0.99;

struct Decision {
  std::size_t action = 0;
  std::optional<safety::UncertaintyReport> report;  // ensemble policies only
};

/// Maps the current scene (and its observation) to an action.
using Policy = std::function<Decision(const env::TrafficState&, const Observation&)>;

Policy heuristic_policy(const env::EnvParams& params);
Policy constant_policy(std::size_t action);
/// Mean-Q argmax with a full report; with a threshold the safety gate is
/// applied instead.
Policy ensemble_policy(const agent::EnsembleAgent& agent,
                       std::optional<double> gate_threshold = std::nullopt);
/// ensemble_policy for ensembles, greedy_action otherwise.
Policy greedy_policy(const agent::Learner& learner,
                     std::optional<double> gate_threshold = std::nullopt);

/// One transition as seen by an episode observer.
struct StepRecord {
  int step = 0;  // 1-based index of the transition
  const env::TrafficState* before = nullptr;
  const Observation* observation = nullptr;
  const Decision* decision = nullptr;
  const env::StepOutcome* outcome = nullptr;
};

struct EpisodeResult {
  std::uint64_t seed = 0;
  double discounted_return = 0.0;
  bool crashed = false;  // collision or off-road
  int steps = 0;
  int fallbacks = 0;
  std::vector<double> chosen_cv;  // c_v of the chosen action, ensemble policies only
};

EpisodeResult run_episode(const env::Highway& highway, env::ScenarioConfig scenario,
                          std::uint64_t seed, const Policy& policy,
                          const std::function<void(const StepRecord&)>& observer = {});

/// The fixed evaluation episodes of a session, derived from the master seed.
std::vector<std::uint64_t> suite_seeds(std::uint64_t master_seed, std::size_t episodes);

/// Heuristic-driver returns on a suite, the normalizer of every evaluation.
struct Baseline {
  std::vector<std::uint64_t> seeds;
  std::vector<double> returns;
  std::vector<bool> crashed;
};

Baseline compute_baseline(const env::Highway& highway, const env::ScenarioConfig& scenario,
                          const std::vector<std::uint64_t>& seeds, std::size_t threads = 1);
void write_baseline(std::ostream& out, const Baseline& baseline);
Baseline read_baseline(std::istream& in);

struct EvaluationResult {
  std::uint64_t training_step = 0;  // environment steps when evaluated
  std::size_t episodes = 0;
  double collision_free_fraction = 0.0;
  double mean_normalized_return = 0.0;  // mean of per-episode ratios
  double normalized_return_std = 0.0;
  double mean_return = 0.0;
  // Chosen-action c_v over every decision; NaN for single-network agents.
  double cv_mean = 0.0;
  double cv_std = 0.0;
  double cv_p1 = 0.0;
  double cv_p50 = 0.0;
  double cv_p99 = 0.0;

  friend bool operator==(const EvaluationResult&, const EvaluationResult&) = default;
};

/// Runs every suite episode with the policy. Throws UsageError when the
/// baseline is missing or was computed on other seeds.
EvaluationResult evaluate_suite(const env::Highway& highway, const env::ScenarioConfig& scenario,
                                const Baseline* baseline, const Policy& policy,
                                std::size_t threads = 1,
                                std::vector<EpisodeResult>* episodes = nullptr);

/// Linear interpolation between closest ranks; values need not be sorted.
double percentile(std::vector<double> values, double p);

std::string metrics_csv_header();
void write_metrics_row(std::ostream& out, const EvaluationResult& result);
std::vector<EvaluationResult> read_metrics(std::istream& in);
std::vector<EvaluationResult> read_metrics(const std::filesystem::path& path);

}  // namespace rpf::harness
