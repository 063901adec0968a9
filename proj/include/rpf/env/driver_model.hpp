#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "rpf/env/types.hpp"

namespace rpf::env {

struct Neighbor {
  std::size_t index = 0;
  double gap = 0.0;  // bumper-to-bumper, m; negative means overlap
};

/// Closest vehicle ahead of vehicles[self] occupying any lane in lane_mask.
std::optional<Neighbor> find_leader(std::span<const Vehicle> vehicles, std::size_t self,
                                    unsigned lane_mask);
/// Closest vehicle behind vehicles[self] occupying any lane in lane_mask.
std::optional<Neighbor> find_follower(std::span<const Vehicle> vehicles, std::size_t self,
                                      unsigned lane_mask);

struct LeaderInfo {
  double gap = 0.0;
  double speed = 0.0;
};

/// Intelligent Driver Model acceleration, clamped to [-max_decel, max_accel].
double idm_accel(double speed, double desired_speed, std::optional<LeaderInfo> leader,
                 const IdmParams& params);

inline double surrounding_accel(const Vehicle& vehicle, std::optional<LeaderInfo> leader,
                                const IdmParams& params) {
  return idm_accel(vehicle.vx, vehicle.desired_speed, leader, params);
}

/// Overtaking decision without cooperation: change towards an adjacent lane
/// when the current leader holds the vehicle back, the other lane promises a
/// higher speed and nobody involved would have to brake harder than
/// safe_decel. Vehicles already changing lanes always stay.
Lateral surrounding_lane_change(std::span<const Vehicle> vehicles, std::size_t self,
                                const EnvParams& params);

}  // namespace rpf::env
