#include "rpf/env/heuristic.hpp"

#include <algorithm>
#include <cmath>

#include "rpf/env/driver_model.hpp"

namespace rpf::env {

std::size_t heuristic_driver_policy(const TrafficState& state, const EnvParams& env,
                                    const HeuristicParams& params) {
  const auto& vs = state.vehicles;
  const Vehicle& ego = vs.front();
  std::optional<LeaderInfo> leader;
  if (const auto found = find_leader(vs, 0, ego.lane_mask())) {
    leader = LeaderInfo{found->gap, vs[found->index].vx};
  }
  const double accel = idm_accel(ego.vx, ego.desired_speed, leader, params.idm);
  if (accel < params.hard_brake_below) return kHardBrakeAction;

  const double quantized = std::round(std::clamp(accel, -1.0, 1.0));
  EnvParams ego_env = env;
  ego_env.idm = params.idm;
  const Lateral lateral = surrounding_lane_change(vs, 0, ego_env);
  return action_index(quantized == 0.0 ? 0.0 : quantized, lateral);
}

}  // namespace rpf::env
