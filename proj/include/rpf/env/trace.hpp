#pragma once

#include <ostream>

#include "rpf/env/types.hpp"

namespace rpf::env {

/// Trajectory export, one row per (step, vehicle). Step 0 is the initial
/// state with zero reward and no events; row k > 0 holds the state after
/// the k-th transition together with that transition's reward and events.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out);

  void write_initial(const TrafficState& state);
  void write_step(const StepOutcome& outcome);

 private:
  void write_rows(const TrafficState& state, double reward, const EventFlags& events);
  std::ostream& out_;
};

}  // namespace rpf::env
