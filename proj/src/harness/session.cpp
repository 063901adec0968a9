#include "rpf/harness/session.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "rpf/agent/training.hpp"
#include "rpf/env/highway.hpp"
#include "rpf/env/scenario_io.hpp"
#include "rpf/error.hpp"

namespace rpf::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kLogFile = "training_log.csv";
constexpr const char* kBaselineFile = "baseline.csv";
constexpr const char* kCheckpointManifest = "session.json";
constexpr const char* kTrainerFile = "trainer.json";

ordered_json learning_to_json(const agent::LearningParams& p) {
  return {{"gamma", p.gamma},
          {"huber_delta", p.huber_delta},
          {"learning_rate", p.learning_rate},
          {"batch_size", p.batch_size}};
}

agent::LearningParams learning_from_json(const json& j) {
  agent::LearningParams p;
  p.gamma = j.at("gamma");
  p.huber_delta = j.at("huber_delta");
  p.learning_rate = j.at("learning_rate");
  p.batch_size = j.at("batch_size");
  return p;
}

ordered_json shape_to_json(const nn::NetworkShape& s) {
  return {{"conv_filters", s.conv_filters}, {"hidden_units", s.hidden_units}};
}

nn::NetworkShape shape_from_json(const json& j) {
  nn::NetworkShape s;
  s.conv_filters = j.at("conv_filters");
  s.hidden_units = j.at("hidden_units");
  return s;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

fs::path checkpoint_dir(const fs::path& out_dir, std::uint64_t step) {
  return out_dir / ("checkpoint_" + std::to_string(step));
}

/// The replay memory is large; older checkpoints keep networks only.
void drop_replay(const fs::path& dir) {
  const fs::path manifest = dir / "agent.json";
  if (!fs::exists(manifest)) return;
  ordered_json j = ordered_json::parse(read_file(manifest));
  j["replay_saved"] = false;
  write_file(manifest, j.dump(2) + "\n");
  fs::remove(dir / "replay.bin");
}

void cut_file(const fs::path& path, std::uintmax_t size) {
  if (!fs::exists(path) || fs::file_size(path) < size) {
    throw FormatError(path.string() + " is shorter than recorded in the checkpoint");
  }
  fs::resize_file(path, size);
}

struct SessionFiles {
  fs::path out_dir;
  std::ofstream metrics;
  std::ofstream log;
};

/// Shared by fresh and resumed sessions: runs from trainer.env_steps() to
/// config.total_steps.
std::vector<EvaluationResult> run_loop(const SessionConfig& config, agent::Learner& learner,
                                       agent::Trainer& trainer, SessionFiles& files,
                                       const Baseline& baseline,
                                       std::vector<EvaluationResult> history,
                                       std::ostream* progress) {
  const env::Highway highway;
  agent::TrainingLog log(files.log, false);
  trainer.set_log(&log);
  std::optional<fs::path> previous;
  if (!history.empty()) previous = checkpoint_dir(files.out_dir, history.back().training_step);

  while (trainer.env_steps() < config.total_steps) {
    const std::uint64_t next =
        std::min((trainer.env_steps() / config.eval_interval + 1) * config.eval_interval,
                 config.total_steps);
    trainer.run_until(next);

    EvaluationResult result = evaluate_suite(highway, config.scenario, &baseline,
                                             greedy_policy(learner), config.eval_threads);
    result.training_step = trainer.env_steps();
    write_metrics_row(files.metrics, result);
    files.metrics.flush();
    files.log.flush();
    if (!files.metrics || !files.log) throw FormatError("failed writing session outputs");
    history.push_back(result);

    const fs::path dir = checkpoint_dir(files.out_dir, trainer.env_steps());
    const fs::path staging = dir.string() + ".partial";
    fs::remove_all(staging);
    learner.save(staging, true);
    write_file(staging / kTrainerFile, trainer.save_state());
    ordered_json manifest;
    manifest["env_steps"] = trainer.env_steps();
    manifest["metrics_bytes"] = fs::file_size(files.out_dir / kMetricsFile);
    manifest["log_bytes"] = fs::file_size(files.out_dir / kLogFile);
    manifest["session"] = ordered_json::parse(session_to_json(config));
    write_file(staging / kCheckpointManifest, manifest.dump(2) + "\n");
    fs::remove_all(dir);
    fs::rename(staging, dir);
    if (previous && *previous != dir) drop_replay(*previous);
    previous = dir;

    if (progress) {
      *progress << "step " << result.training_step << ": collision-free "
                << io::format_number(result.collision_free_fraction) << ", normalized return "
                << io::format_number(result.mean_normalized_return) << '\n';
    }
  }
  return history;
}

}  // namespace

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kRpf:
      return "rpf";
    case AgentKind::kDqn:
      return "dqn";
    case AgentKind::kHeuristic:
      return "heuristic";
  }
  return "?";
}

AgentKind agent_kind_from_string(std::string_view name) {
  if (name == "rpf") return AgentKind::kRpf;
  if (name == "dqn") return AgentKind::kDqn;
  if (name == "heuristic") return AgentKind::kHeuristic;
  throw ConfigError("unknown agent '" + std::string(name) + "' (expected rpf, dqn or heuristic)");
}

SessionConfig desk_profile() {
  SessionConfig c;
  c.profile = "desk";
  c.total_steps = 100000;
  c.eval_interval = 10000;
  c.eval_episodes = 20;
  c.scenario.vehicle_count = 12;
  c.ensemble.members = 3;
  c.ensemble.replay_capacity = 100000;
  c.ensemble.learning_start = 5000;
  c.ensemble.target_update = 1000;
  c.ensemble.prior_scale = 10.0;
  c.ensemble.learning.learning_rate = 1e-3;
  c.dqn.learning.learning_rate = 1e-3;
  c.dqn.replay_capacity = 100000;
  c.dqn.learning_start = 5000;
  c.dqn.target_update = 1000;
  c.dqn.epsilon_steps = 20000;
  return c;
}

SessionConfig paper_profile() {
  SessionConfig c;
  c.profile = "paper";
  c.total_steps = 5000000;
  c.eval_interval = 50000;
  c.eval_episodes = 100;
  c.scenario.vehicle_count = 25;
  return c;  // agent defaults are the full-size values
}

SessionConfig profile_config(std::string_view name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

std::string session_to_json(const SessionConfig& c) {
  ordered_json j;
  j["agent"] = to_string(c.agent);
  j["profile"] = c.profile;
  j["seed"] = c.seed;
  j["total_steps"] = c.total_steps;
  j["eval_interval"] = c.eval_interval;
  j["eval_episodes"] = c.eval_episodes;
  j["loss_log_interval"] = c.loss_log_interval;
  j["eval_threads"] = c.eval_threads;
  std::ostringstream scenario;
  env::write_scenario(scenario, c.scenario);
  j["scenario"] = scenario.str();
  const agent::EnsembleConfig& e = c.ensemble;
  j["ensemble"] = {{"members", e.members},
                   {"prior_scale", e.prior_scale},
                   {"p_add", e.p_add},
                   {"replay_capacity", e.replay_capacity},
                   {"learning_start", e.learning_start},
                   {"target_update", e.target_update},
                   {"threads", e.threads},
                   {"learning", learning_to_json(e.learning)},
                   {"shape", shape_to_json(e.shape)}};
  const agent::DqnConfig& d = c.dqn;
  j["dqn"] = {{"epsilon_start", d.epsilon_start},
              {"epsilon_end", d.epsilon_end},
              {"epsilon_steps", d.epsilon_steps},
              {"replay_capacity", d.replay_capacity},
              {"learning_start", d.learning_start},
              {"target_update", d.target_update},
              {"learning", learning_to_json(d.learning)},
              {"shape", shape_to_json(d.shape)}};
  return j.dump(2);
}

SessionConfig session_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SessionConfig c;
    c.agent = agent_kind_from_string(j.at("agent").get<std::string>());
    c.profile = j.at("profile");
    c.seed = j.at("seed");
    c.total_steps = j.at("total_steps");
    c.eval_interval = j.at("eval_interval");
    c.eval_episodes = j.at("eval_episodes");
    c.loss_log_interval = j.at("loss_log_interval");
    c.eval_threads = j.at("eval_threads");
    c.scenario = env::parse_scenario(j.at("scenario").get<std::string>());
    const json& e = j.at("ensemble");
    c.ensemble.members = e.at("members");
    c.ensemble.prior_scale = e.at("prior_scale");
    c.ensemble.p_add = e.at("p_add");
    c.ensemble.replay_capacity = e.at("replay_capacity");
    c.ensemble.learning_start = e.at("learning_start");
    c.ensemble.target_update = e.at("target_update");
    c.ensemble.threads = e.at("threads");
    c.ensemble.learning = learning_from_json(e.at("learning"));
    c.ensemble.shape = shape_from_json(e.at("shape"));
    const json& d = j.at("dqn");
    c.dqn.epsilon_start = d.at("epsilon_start");
    c.dqn.epsilon_end = d.at("epsilon_end");
    c.dqn.epsilon_steps = d.at("epsilon_steps");
    c.dqn.replay_capacity = d.at("replay_capacity");
    c.dqn.learning_start = d.at("learning_start");
    c.dqn.target_update = d.at("target_update");
    c.dqn.learning = learning_from_json(d.at("learning"));
    c.dqn.shape = shape_from_json(d.at("shape"));
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed session manifest: ") + e.what());
  }
}

std::unique_ptr<agent::Learner> make_learner(const SessionConfig& config) {
  switch (config.agent) {
    case AgentKind::kRpf:
      return std::make_unique<agent::EnsembleAgent>(config.ensemble, config.seed);
    case AgentKind::kDqn:
      return std::make_unique<agent::DqnAgent>(config.dqn, config.seed);
    case AgentKind::kHeuristic:
      break;
  }
  throw ConfigError("the heuristic driver is not trainable");
}

LoadedCheckpoint load_checkpoint(const fs::path& dir, bool restore_replay) {
  const fs::path manifest_path = dir / kCheckpointManifest;
  if (!fs::exists(manifest_path)) {
    throw FormatError(dir.string() + " is not a checkpoint (no " + kCheckpointManifest + ")");
  }
  const json manifest = json::parse(read_file(manifest_path));
  LoadedCheckpoint c;
  c.config = session_from_json(manifest.at("session").dump());
  c.env_steps = manifest.at("env_steps");
  c.learner = make_learner(c.config);
  c.learner->load(dir, restore_replay);
  return c;
}

Baseline session_baseline(const SessionConfig& config, const fs::path& out_dir) {
  const std::vector<std::uint64_t> seeds = suite_seeds(config.seed, config.eval_episodes);
  const fs::path path = out_dir / kBaselineFile;
  if (fs::exists(path)) {
    std::ifstream in(path);
    Baseline b = read_baseline(in);
    if (b.seeds != seeds) {
      throw ConfigError(path.string() + " belongs to a different evaluation suite");
    }
    return b;
  }
  const env::Highway highway;
  Baseline b = compute_baseline(highway, config.scenario, seeds, config.eval_threads);
  std::ofstream out(path);
  write_baseline(out, b);
  if (!out) throw FormatError("cannot write " + path.string());
  return b;
}

std::vector<EvaluationResult> run_training_session(const SessionConfig& config,
                                                   const fs::path& out_dir,
                                                   std::ostream* progress) {
  if (config.eval_interval == 0) throw ConfigError("evaluation interval must be positive");
  if (config.eval_episodes == 0) throw ConfigError("the evaluation suite needs episodes");
  env::validate(config.scenario);
  std::unique_ptr<agent::Learner> learner = make_learner(config);

  fs::create_directories(out_dir);
  write_file(out_dir / "session.json", session_to_json(config) + "\n");
  const Baseline baseline = session_baseline(config, out_dir);

  SessionFiles files{out_dir, std::ofstream(out_dir / kMetricsFile, std::ios::binary),
                     std::ofstream(out_dir / kLogFile, std::ios::binary)};
  if (!files.metrics || !files.log) throw FormatError("cannot create outputs in " + out_dir.string());
  files.metrics << metrics_csv_header() << '\n';
  agent::TrainingLog header(files.log);

  const env::Highway highway;
  agent::Trainer trainer(*learner, highway, config.scenario, config.seed, config.loss_log_interval);
  return run_loop(config, *learner, trainer, files, baseline, {}, progress);
}

std::vector<EvaluationResult> resume_training_session(const fs::path& checkpoint,
                                                      std::optional<std::uint64_t> total_steps,
                                                      std::optional<fs::path> out_dir,
                                                      std::ostream* progress) {
  const json manifest = json::parse(read_file(checkpoint / kCheckpointManifest));
  LoadedCheckpoint loaded = load_checkpoint(checkpoint, true);
  SessionConfig config = loaded.config;
  if (total_steps) config.total_steps = *total_steps;
  fs::path normalized = fs::absolute(checkpoint).lexically_normal();
  if (!normalized.has_filename()) normalized = normalized.parent_path();  // trailing '/'
  const fs::path source = normalized.parent_path();
  const fs::path out = out_dir ? *out_dir : source;

  if (!fs::exists(out) || !fs::equivalent(out, source)) {
    // Resuming into another directory: carry over the session's outputs.
    fs::create_directories(out);
    for (const char* name : {kMetricsFile, kLogFile, kBaselineFile}) {
      fs::copy_file(source / name, out / name, fs::copy_options::overwrite_existing);
    }
  }
  cut_file(out / kMetricsFile, manifest.at("metrics_bytes").get<std::uintmax_t>());
  cut_file(out / kLogFile, manifest.at("log_bytes").get<std::uintmax_t>());
  write_file(out / "session.json", session_to_json(config) + "\n");
  const Baseline baseline = session_baseline(config, out);

  std::vector<EvaluationResult> history = read_metrics(out / kMetricsFile);
  SessionFiles files{out, std::ofstream(out / kMetricsFile, std::ios::binary | std::ios::app),
                     std::ofstream(out / kLogFile, std::ios::binary | std::ios::app)};
  const env::Highway highway;
  agent::Trainer trainer(*loaded.learner, highway, config.scenario, config.seed,
                         config.loss_log_interval);
  trainer.restore_state(read_file(checkpoint / kTrainerFile));
  if (trainer.env_steps() != loaded.env_steps) {
    throw FormatError("checkpoint trainer state and manifest disagree on the step count");
  }
  return run_loop(config, *loaded.learner, trainer, files, baseline, std::move(history), progress);
}

}  // namespace rpf::harness
