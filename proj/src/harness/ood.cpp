#include "rpf/harness/ood.hpp"

#include <algorithm>

#include "rpf/harness/evaluation.hpp"
#include "rpf/io/csv.hpp"

namespace rpf::harness {

OodTrace run_ood_scenario(const agent::Learner& learner, const env::Highway& highway,
                          const env::ScenarioConfig& scenario,
                          std::optional<double> gate_threshold) {
  OodTrace trace;
  trace.kind = scenario.kind;
  trace.gated = gate_threshold.has_value();
  trace.threshold = gate_threshold.value_or(0.0);
  const Policy policy = greedy_policy(learner, gate_threshold);
  trace.states.push_back(highway.reset(scenario));
  const EpisodeResult result =
      run_episode(highway, scenario, scenario.seed, policy, [&](const StepRecord& r) {
        const env::Vehicle& ego = r.before->ego();
        OodStep s;
        s.step = r.step;
        s.ego_x = ego.x;
        s.ego_y = ego.y;
        s.ego_vx = ego.vx;
        s.ego_lane = ego.lane;
        s.observed_vehicles = r.observation->vehicle_count();
        s.action = r.decision->action;
        s.reward = r.outcome->reward;
        s.events = r.outcome->events;
        s.report = r.decision->report;
        trace.steps.push_back(s);
        trace.states.push_back(r.outcome->next);
      });
  trace.crashed = result.crashed;
  trace.fallbacks = result.fallbacks;
  for (double cv : result.chosen_cv) trace.max_chosen_cv = std::max(trace.max_chosen_cv, cv);
  return trace;
}

void write_trace(std::ostream& out, const OodTrace& trace) {
  out << "step,ego_x,ego_y,ego_vx,ego_lane,observed_vehicles,action,reward,collision,off_road,"
         "emergency_brake,time_gap,lane_change,"
      << safety::report_csv_header() << '\n';
  for (const OodStep& s : trace.steps) {
    io::CsvRow row;
    row.add(s.step)
        .add(s.ego_x)
        .add(s.ego_y)
        .add(s.ego_vx)
        .add(s.ego_lane)
        .add(s.observed_vehicles)
        .add(s.action)
        .add(s.reward)
        .add(s.events.collision)
        .add(s.events.off_road)
        .add(s.events.emergency_brake_caused)
        .add(s.events.time_gap_violation)
        .add(s.events.lane_change_initiated);
    if (s.report) {
      safety::append_report(row, *s.report);
    } else {
      for (std::size_t i = 0; i < 3 * kNumActions; ++i) row.add("");
      row.add(s.action).add(false);
    }
    row.write(out);
  }
}

}  // namespace rpf::harness
