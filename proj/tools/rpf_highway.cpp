// Command-line front end: train, evaluate, scenario, compare, baseline.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rpf/env/highway.hpp"
#include "rpf/env/scenario_io.hpp"
#include "rpf/env/trace.hpp"
#include "rpf/error.hpp"
#include "rpf/harness/compare.hpp"
#include "rpf/harness/evaluation.hpp"
#include "rpf/harness/ood.hpp"
#include "rpf/harness/session.hpp"
#include "rpf/io/csv.hpp"
#include "rpf/safety/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace rpf;
using namespace rpf::harness;

namespace {

struct SessionFlags {
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> agent;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> eval_interval;
  std::optional<std::size_t> episodes;
  std::optional<int> vehicles;
  std::optional<std::size_t> members;
  std::optional<std::uint64_t> learning_start;
  std::optional<std::uint64_t> target_update;
  std::optional<std::size_t> threads;

  void add_to(CLI::App& cmd, bool full) {
    cmd.add_option("--profile", profile, "base settings: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    cmd.add_option("--seed", seed, "master seed (training streams and the evaluation suite)");
    cmd.add_option("--episodes", episodes, "episodes in the fixed evaluation suite");
    cmd.add_option("--vehicles", vehicles, "surrounding vehicles per episode");
    cmd.add_option("--threads", threads, "worker threads (member updates, evaluation episodes)");
    if (!full) return;
    cmd.add_option("--agent", agent, "agent to train: rpf or dqn")
        ->check(CLI::IsMember({"rpf", "dqn"}));
    cmd.add_option("--steps", steps, "environment steps to train for");
    cmd.add_option("--eval-interval,--eval_interval", eval_interval,
                   "environment steps between evaluations");
    cmd.add_option("--members", members, "ensemble size");
    cmd.add_option("--learning-start,--learning_start", learning_start,
                   "environment steps before the first update");
    cmd.add_option("--target-update,--target_update", target_update,
                   "training iterations between target-network syncs");
  }

  SessionConfig build() const {
    SessionConfig c = profile_config(profile);
    if (seed) c.seed = *seed;
    if (agent) c.agent = agent_kind_from_string(*agent);
    if (steps) c.total_steps = *steps;
    if (eval_interval) c.eval_interval = *eval_interval;
    if (episodes) c.eval_episodes = *episodes;
    if (vehicles) c.scenario.vehicle_count = *vehicles;
    if (members) c.ensemble.members = *members;
    if (learning_start) c.ensemble.learning_start = c.dqn.learning_start = *learning_start;
    if (target_update) c.ensemble.target_update = c.dqn.target_update = *target_update;
    if (threads) c.ensemble.threads = c.eval_threads = *threads;
    return c;
  }
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

void print_result(const EvaluationResult& r) {
  std::cout << "episodes:                " << r.episodes << '\n'
            << "collision-free fraction: " << io::format_number(r.collision_free_fraction) << '\n'
            << "mean normalized return:  " << io::format_number(r.mean_normalized_return) << '\n'
            << "mean discounted return:  " << io::format_number(r.mean_return) << '\n';
  if (!std::isnan(r.cv_p50)) {
    std::cout << "chosen-action c_v p1/p50/p99: " << io::format_number(r.cv_p1) << " / "
              << io::format_number(r.cv_p50) << " / " << io::format_number(r.cv_p99) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Highway tactical driving with ensemble RL and uncertainty-gated decisions"};
  app.set_config("--config", "", "read options from a TOML/INI file ([train], [evaluate], ...)");
  app.require_subcommand(1);

  // train
  SessionFlags train_flags;
  std::string train_out;
  std::string resume;
  auto* train = app.add_subcommand("train", "train an agent with periodic evaluation and checkpoints");
  train_flags.add_to(*train, true);
  train->add_option("--out", train_out, "session directory")->required();
  train->add_option("--resume", resume, "continue from this checkpoint_<step> directory")
      ->check(CLI::ExistingDirectory);

  // evaluate
  SessionFlags eval_flags;
  std::string eval_out;
  std::string eval_checkpoint;
  std::string eval_agent = "rpf";
  auto* evaluate = app.add_subcommand("evaluate", "greedy evaluation on the fixed suite");
  eval_flags.add_to(*evaluate, false);
  evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint directory to evaluate")
      ->check(CLI::ExistingDirectory);
  evaluate->add_option("--agent", eval_agent, "rpf/dqn (from --checkpoint) or heuristic")
      ->check(CLI::IsMember({"rpf", "dqn", "heuristic"}));
  evaluate->add_option("--out", eval_out, "output directory")->required();

  // scenario
  std::string scen_checkpoint;
  std::string scen_kind = "stopped";
  std::string gate = "off";
  double threshold = safety::kDefaultSafeThreshold;
  std::uint64_t scen_seed = 0;
  std::string scen_file;
  std::string scen_out;
  auto* scenario = app.add_subcommand("scenario", "replay a scenario and trace uncertainty per step");
  scenario->add_option("--checkpoint", scen_checkpoint, "trained checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  scenario->add_option("--scenario", scen_kind, "nominal, stopped, speeder or oncoming")
      ->check(CLI::IsMember({"nominal", "stopped", "speeder", "oncoming"}))
      ->capture_default_str();
  scenario->add_option("--gate", gate, "safety gate on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  scenario->add_option("--threshold", threshold, "c_v threshold of the gate")->capture_default_str();
  scenario->add_option("--seed", scen_seed, "scenario seed")->capture_default_str();
  scenario->add_option("--scenario-file,--scenario_file", scen_file,
                       "key = value file overriding scenario geometry")
      ->check(CLI::ExistingFile);
  scenario->add_option("--out", scen_out, "output directory")->required();

  // compare
  std::vector<std::string> runs;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "align the metrics of several sessions");
  compare->add_option("runs", runs, "session directories")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--out", cmp_out, "output directory")->required();

  // baseline
  SessionFlags base_flags;
  std::string base_out;
  auto* baseline = app.add_subcommand("baseline", "heuristic-driver returns on the fixed suite");
  base_flags.add_to(*baseline, false);
  baseline->add_option("--out", base_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) {
      std::vector<EvaluationResult> history;
      if (!resume.empty()) {
        history = resume_training_session(resume, train_flags.steps, fs::path(train_out), &std::cout);
      } else {
        if (!train_flags.seed) throw UsageError("train needs --seed");
        const SessionConfig config = train_flags.build();
        history = run_training_session(config, train_out, &std::cout);
      }
      std::cout << "wrote " << history.size() << " evaluations to " << train_out << "/metrics.csv\n";
    } else if (*evaluate) {
      fs::create_directories(eval_out);
      std::optional<LoadedCheckpoint> loaded;
      SessionConfig config = eval_flags.build();
      if (eval_agent != "heuristic") {
        if (eval_checkpoint.empty()) throw UsageError("evaluate needs --checkpoint for rpf/dqn");
        loaded = load_checkpoint(eval_checkpoint);
        if (to_string(loaded->config.agent) != eval_agent && evaluate->count("--agent") > 0) {
          throw ConfigError("checkpoint holds a '" + std::string(to_string(loaded->config.agent)) +
                            "' agent");
        }
        // Same suite as during training unless overridden.
        const SessionConfig trained = loaded->config;
        config.seed = eval_flags.seed.value_or(trained.seed);
        config.eval_episodes = eval_flags.episodes.value_or(trained.eval_episodes);
        config.scenario = trained.scenario;
        if (eval_flags.vehicles) config.scenario.vehicle_count = *eval_flags.vehicles;
      } else if (!eval_flags.seed) {
        throw UsageError("evaluate --agent heuristic needs --seed");
      }
      const Baseline base = session_baseline(config, eval_out);
      const env::Highway highway;
      const Policy policy =
          loaded ? greedy_policy(*loaded->learner) : heuristic_policy(highway.params());
      EvaluationResult r =
          evaluate_suite(highway, config.scenario, &base, policy, config.eval_threads);
      r.training_step = loaded ? loaded->env_steps : 0;
      std::ofstream out = open_output(fs::path(eval_out) / "evaluation.csv");
      out << metrics_csv_header() << '\n';
      write_metrics_row(out, r);
      print_result(r);
    } else if (*scenario) {
      const LoadedCheckpoint loaded = load_checkpoint(scen_checkpoint);
      env::ScenarioConfig sc = scen_file.empty() ? loaded.config.scenario : env::read_scenario(scen_file);
      sc.kind = env::scenario_kind_from_string(scen_kind);
      sc.seed = scen_seed;
      const env::Highway highway;
      const std::optional<double> gate_threshold =
          gate == "on" ? std::optional<double>(threshold) : std::nullopt;
      const OodTrace trace = run_ood_scenario(*loaded.learner, highway, sc, gate_threshold);
      fs::create_directories(scen_out);
      std::ofstream out = open_output(fs::path(scen_out) / ("trace_" + scen_kind + ".csv"));
      write_trace(out, trace);
      std::ofstream traj = open_output(fs::path(scen_out) / ("trajectory_" + scen_kind + ".csv"));
      env::TrajectoryWriter writer(traj);
      writer.write_initial(trace.states.front());
      for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        env::StepOutcome o;
        o.next = trace.states[i + 1];
        o.reward = trace.steps[i].reward;
        o.events = trace.steps[i].events;
        writer.write_step(o);
      }
      std::cout << "steps: " << trace.steps.size() << ", crashed: " << (trace.crashed ? "yes" : "no")
                << ", fallbacks: " << trace.fallbacks
                << ", max chosen-action c_v: " << io::format_number(trace.max_chosen_cv) << '\n';
    } else if (*compare) {
      std::vector<RunMetrics> metrics;
      for (const std::string& dir : runs) metrics.push_back(read_run(dir));
      const Comparison c = compare_runs(std::move(metrics));
      fs::create_directories(cmp_out);
      std::ofstream csv = open_output(fs::path(cmp_out) / "compare.csv");
      write_comparison_csv(csv, c);
      std::ofstream text = open_output(fs::path(cmp_out) / "report.txt");
      write_comparison_text(text, c);
      write_comparison_text(std::cout, c);
      for (const std::string& w : c.warnings) std::cerr << "warning: " << w << '\n';
    } else if (*baseline) {
      if (!base_flags.seed) throw UsageError("baseline needs --seed");
      const SessionConfig config = base_flags.build();
      fs::create_directories(base_out);
      fs::remove(fs::path(base_out) / "baseline.csv");
      const Baseline b = session_baseline(config, base_out);
      double sum = 0.0;
      int crashes = 0;
      for (std::size_t i = 0; i < b.returns.size(); ++i) {
        sum += b.returns[i];
        crashes += b.crashed[i];
      }
      std::cout << "heuristic driver over " << b.returns.size() << " episodes: mean discounted return "
                << io::format_number(sum / static_cast<double>(b.returns.size())) << ", crashes "
                << crashes << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
