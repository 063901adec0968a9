#pragma once

#include <cstddef>

#include "rpf/env/types.hpp"
#include "rpf/rng.hpp"
#include "rpf/types.hpp"

namespace rpf::env {

/// Three-lane one-way highway with a fixed 1 s step.
///
/// A step applies the ego command, lets surrounding vehicles decide on lane
/// changes (sequentially, each seeing the commitments made before it), then
/// evaluates all IDM accelerations on the resulting lane occupancy and
/// integrates speed first, then position.
class Highway {
 public:
  explicit Highway(EnvParams params = {}) : params_(params) {}

  const EnvParams& params() const { return params_; }

  /// New episode for the scenario, deterministic in config.seed.
  /// Throws ConfigError when the vehicles cannot be placed.
  TrafficState reset(const ScenarioConfig& config) const;

  /// Advances one time step. Throws UsageError on a terminated state.
  StepOutcome step(const TrafficState& state, std::size_t action) const;
  StepOutcome step(const TrafficState& state, const EgoAction& action) const;

  /// Normalized network input for the ego's current view.
  Observation observe(const TrafficState& state) const;

 private:
  TrafficState reset_nominal(const ScenarioConfig& config) const;
  TrafficState reset_stopped(const ScenarioConfig& config) const;
  TrafficState reset_speeding(const ScenarioConfig& config) const;
  TrafficState reset_oncoming(const ScenarioConfig& config) const;
  Vehicle make_ego(double x, int lane, double speed) const;

  EnvParams params_;
};

/// Result of the geometric overlap test.
struct CollisionFlags {
  bool ego = false;
  int others = 0;
};

/// Overlap at the current instant: two vehicles collide when their
/// longitudinal extents overlap strictly and they share an occupied lane.
CollisionFlags collision_check(const TrafficState& state);

/// Overlap at the end of the step, or two vehicles sharing a lane during the
/// step whose order along the road swapped (they passed through each other).
CollisionFlags collision_check(const TrafficState& before, const TrafficState& after);

/// Inputs of the reward for one transition.
struct RewardContext {
  double ego_speed = 0.0;
  bool collision = false;
  bool off_road = false;
  bool emergency_brake_caused = false;
  bool time_gap_violation = false;
  bool lane_change_initiated = false;
};

double compute_reward(const RewardContext& context, const RewardParams& params);

}  // namespace rpf::env
