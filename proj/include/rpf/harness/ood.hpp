#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "rpf/agent/learner.hpp"
#include "rpf/env/highway.hpp"
#include "rpf/env/types.hpp"
#include "rpf/safety/uncertainty.hpp"

namespace rpf::harness {

/// One decision of a scenario replay: the scene the decision was made in,
/// what was chosen and what the transition produced.
struct OodStep {
  int step = 0;  // 1-based
  double ego_x = 0.0;
  double ego_y = 0.0;
  double ego_vx = 0.0;
  int ego_lane = 0;
  std::size_t observed_vehicles = 0;  // vehicles within sensor range
  std::size_t action = 0;
  double reward = 0.0;
  env::EventFlags events;
  std::optional<safety::UncertaintyReport> report;  // ensemble agents
};

struct OodTrace {
  env::ScenarioKind kind = env::ScenarioKind::kNominal;
  bool gated = false;
  double threshold = 0.0;
  std::vector<OodStep> steps;
  std::vector<env::TrafficState> states;  // initial state, then one per step
  bool crashed = false;
  int fallbacks = 0;
  double max_chosen_cv = 0.0;  // over the ensemble's chosen actions
};

/// Replays one episode of the scenario with the learner's greedy policy;
/// with a threshold the safety gate picks the actions.
OodTrace run_ood_scenario(const agent::Learner& learner, const env::Highway& highway,
                          const env::ScenarioConfig& scenario,
                          std::optional<double> gate_threshold = std::nullopt);

/// One row per decision; uncertainty columns stay empty without a report.
void write_trace(std::ostream& out, const OodTrace& trace);

}  // namespace rpf::harness
