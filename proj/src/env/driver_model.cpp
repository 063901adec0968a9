#include "rpf/env/driver_model.hpp"

#include <algorithm>
#include <cmath>

namespace rpf::env {

std::optional<Neighbor> find_leader(std::span<const Vehicle> vehicles, std::size_t self,
                                    unsigned lane_mask) {
  const Vehicle& me = vehicles[self];
  std::optional<Neighbor> best;
  for (std::size_t j = 0; j < vehicles.size(); ++j) {
    if (j == self || (vehicles[j].lane_mask() & lane_mask) == 0) continue;
    if (vehicles[j].x <= me.x) continue;
    const double gap = vehicles[j].rear() - me.x;
    if (!best || gap < best->gap) best = Neighbor{j, gap};
  }
  return best;
}

std::optional<Neighbor> find_follower(std::span<const Vehicle> vehicles, std::size_t self,
                                      unsigned lane_mask) {
  const Vehicle& me = vehicles[self];
  std::optional<Neighbor> best;
  for (std::size_t j = 0; j < vehicles.size(); ++j) {
    if (j == self || (vehicles[j].lane_mask() & lane_mask) == 0) continue;
    if (vehicles[j].x >= me.x) continue;
    const double gap = me.rear() - vehicles[j].x;
    if (!best || gap < best->gap) best = Neighbor{j, gap};
  }
  return best;
}

double idm_accel(double speed, double desired_speed, std::optional<LeaderInfo> leader,
                 const IdmParams& p) {
  double free_term;
  if (desired_speed > 0.0) {
    free_term = 1.0 - std::pow(std::max(speed, 0.0) / desired_speed, p.exponent);
  } else {
    free_term = speed > 0.0 ? -1e9 : 0.0;
  }
  double interaction = 0.0;
  if (leader) {
    if (leader->gap <= 0.0) return -p.max_decel;
    const double dynamic =
        speed * p.time_headway +
        speed * (speed - leader->speed) / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
    const double desired_gap = p.min_gap + std::max(0.0, dynamic);
    interaction = (desired_gap / leader->gap) * (desired_gap / leader->gap);
  }
  const double accel = p.max_accel * (free_term - interaction);
  return std::clamp(accel, -p.max_decel, p.max_accel);
}

namespace {

double anticipated_speed(std::span<const Vehicle> vehicles, std::size_t self, int lane,
                         const LaneChangeParams& lc) {
  const Vehicle& me = vehicles[self];
  const auto leader = find_leader(vehicles, self, 1u << lane);
  if (!leader || leader->gap > lc.lookahead) return me.desired_speed;
  return std::min(me.desired_speed, vehicles[leader->index].vx);
}

bool safe_to_enter(std::span<const Vehicle> vehicles, std::size_t self, int lane,
                   const EnvParams& params) {
  const Vehicle& me = vehicles[self];
  const unsigned mask = 1u << lane;
  if (const auto leader = find_leader(vehicles, self, mask)) {
    if (leader->gap < params.idm.min_gap) return false;
    if (leader->gap < params.lane_change.min_time_gap * me.vx) return false;
    const double a = idm_accel(me.vx, me.desired_speed,
                               LeaderInfo{leader->gap, vehicles[leader->index].vx}, params.idm);
    if (a < -params.lane_change.safe_decel) return false;
  }
  if (const auto follower = find_follower(vehicles, self, mask)) {
    if (follower->gap < params.idm.min_gap) return false;
    const Vehicle& f = vehicles[follower->index];
    if (follower->gap < params.lane_change.min_time_gap * f.vx) return false;
    if (f.driver == Driver::kConstantSpeed) return f.vx <= me.vx;
    const double a = idm_accel(f.vx, f.desired_speed, LeaderInfo{follower->gap, me.vx}, params.idm);
    if (a < -params.lane_change.safe_decel) return false;
  }
  // Vehicles alongside (overlapping longitudinally) are neither leader nor
  // follower when their fronts coincide; reject those explicitly.
  for (std::size_t j = 0; j < vehicles.size(); ++j) {
    if (j == self || (vehicles[j].lane_mask() & mask) == 0) continue;
    if (vehicles[j].x == me.x) return false;
  }
  return true;
}

}  // namespace

Lateral surrounding_lane_change(std::span<const Vehicle> vehicles, std::size_t self,
                                const EnvParams& params) {
  const Vehicle& me = vehicles[self];
  if (me.changing_lanes()) return Lateral::kStay;
  const auto& lc = params.lane_change;
  const double current = anticipated_speed(vehicles, self, me.lane, lc);
  if (current >= me.desired_speed - lc.speed_deficit) return Lateral::kStay;

  Lateral best = Lateral::kStay;
  double best_speed = current + lc.speed_gain;
  for (Lateral dir : {Lateral::kLeft, Lateral::kRight}) {
    const int lane = me.lane + (dir == Lateral::kLeft ? 1 : -1);
    if (lane < 0 || lane >= params.road.lanes) continue;
    const double speed = anticipated_speed(vehicles, self, lane, lc);
    if (speed > best_speed && safe_to_enter(vehicles, self, lane, params)) {
      best = dir;
      best_speed = speed;
    }
  }
  return best;
}

}  // namespace rpf::env
