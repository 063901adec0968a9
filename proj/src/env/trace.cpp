#include "rpf/env/trace.hpp"

#include "rpf/io/csv.hpp"

namespace rpf::env {

TrajectoryWriter::TrajectoryWriter(std::ostream& out) : out_(out) {
  out_ << "step,vehicle_id,is_ego,x,y,vx,vy,lane,target_lane,lane_change_progress,reward,"
          "collision,off_road,emergency_brake,time_gap,lane_change,other_collisions\n";
}

void TrajectoryWriter::write_initial(const TrafficState& state) { write_rows(state, 0.0, {}); }

void TrajectoryWriter::write_step(const StepOutcome& outcome) {
  write_rows(outcome.next, outcome.reward, outcome.events);
}

void TrajectoryWriter::write_rows(const TrafficState& state, double reward,
                                  const EventFlags& events) {
  for (const Vehicle& v : state.vehicles) {
    io::CsvRow row;
    row.add(state.elapsed_steps)
        .add(v.id)
        .add(v.is_ego())
        .add(v.x)
        .add(v.y)
        .add(v.vx)
        .add(v.vy)
        .add(v.lane)
        .add(v.target_lane)
        .add(v.lane_change_progress)
        .add(reward)
        .add(events.collision)
        .add(events.off_road)
        .add(events.emergency_brake_caused)
        .add(events.time_gap_violation)
        .add(events.lane_change_initiated)
        .add(events.other_collisions);
    row.write(out_);
  }
}

}  // namespace rpf::env
