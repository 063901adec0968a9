#include "rpf/agent/dqn.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "rpf/error.hpp"
#include "rpf/nn/checkpoint.hpp"
#include "rpf/nn/loss.hpp"

namespace rpf::agent {

double epsilon(const DqnConfig& c, std::uint64_t step) {
  if (c.epsilon_steps == 0 || step >= c.epsilon_steps) return c.epsilon_end;
  const double fraction = static_cast<double>(step) / static_cast<double>(c.epsilon_steps);
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * fraction;
}

DqnAgent::DqnAgent(const DqnConfig& config, std::uint64_t seed)
    : config_(config),
      online_(config.shape),
      target_(config.shape),
      optimizer_(config.shape),
      replay_(config.replay_capacity, 1),
      mask_rng_(derive_seed(seed, "replay-mask")),
      sample_rng_(derive_seed(seed, "sample", 0)),
      explore_rng_(derive_seed(seed, "exploration")),
      gradient_(config.shape) {
  if (config.learning.batch_size == 0) throw ConfigError("batch size must be positive");
  if (config.target_update == 0) throw ConfigError("target update period must be positive");
  if (!(config.epsilon_start >= 0.0 && config.epsilon_start <= 1.0 &&
        config.epsilon_end >= 0.0 && config.epsilon_end <= 1.0)) {
    throw ConfigError("exploration constants must lie in [0, 1]");
  }
  Rng init(derive_seed(seed, "trainable", 0));
  online_ = nn::init_network(init, config.shape);
  target_ = online_;
}

std::size_t DqnAgent::select_action(const Observation& obs, double eps, Rng& rng) const {
  if (rng.uniform() < eps) return rng.uniform_index(kNumActions);
  return argmax(nn::forward(online_, obs));
}

std::size_t DqnAgent::greedy_action(const Observation& obs) const {
  return argmax(nn::forward(online_, obs));
}

double DqnAgent::td_target(const Experience& e) const {
  if (e.terminal) return e.reward;
  const std::size_t best = argmax(nn::forward(online_, e.next_observation));
  return e.reward + config_.learning.gamma * nn::forward(target_, e.next_observation)[best];
}

double DqnAgent::train_step(std::span<const Experience* const> batch) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  // Targets first, from the pre-update networks.
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const Experience* e : batch) targets.push_back(td_target(*e));

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  gradient_.fill(0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Experience& e = *batch[i];
    const QVector q = nn::forward(online_, e.observation, cache_);
    const nn::HuberResult h = nn::huber_loss(targets[i] - q[e.action], config_.learning.huber_delta);
    total += h.loss;
    QVector dq{};
    dq[e.action] = -h.derivative * inv_batch;
    nn::backward(online_, e.observation, cache_, dq, gradient_);
  }
  nn::adam_step(online_, optimizer_, gradient_, config_.learning.learning_rate);
  return total * inv_batch;
}

std::optional<double> DqnAgent::train_from_replay() {
  const auto picks = replay_.sample(0, config_.learning.batch_size, sample_rng_);
  std::optional<double> loss;
  if (picks) {
    std::vector<const Experience*> batch;
    batch.reserve(picks->size());
    for (std::size_t slot : *picks) batch.push_back(&replay_.at(slot));
    loss = train_step(batch);
  }
  ++training_steps_;
  if (training_steps_ % config_.target_update == 0) target_ = online_;
  return loss;
}

std::size_t DqnAgent::training_action(const Observation& obs, std::uint64_t env_step) {
  return select_action(obs, epsilon(config_, env_step), explore_rng_);
}

void DqnAgent::store(Experience e) { replay_.add(std::move(e), 1.0, mask_rng_); }

std::vector<std::optional<double>> DqnAgent::after_step(std::uint64_t env_steps) {
  if (env_steps < config_.learning_start) return {};
  return {train_from_replay()};
}

void DqnAgent::save(const std::filesystem::path& dir, bool with_replay) const {
  std::filesystem::create_directories(dir);
  nn::save_network(dir / "online.bin", online_);
  nn::save_network(dir / "target.bin", target_);
  {
    std::ofstream out(dir / "adam.bin", std::ios::binary);
    nn::write_adam(out, optimizer_);
    if (!out) throw FormatError("failed writing " + (dir / "adam.bin").string());
  }
  nlohmann::ordered_json j;
  j["kind"] = kind();
  j["training_steps"] = training_steps_;
  j["epsilon_start"] = config_.epsilon_start;
  j["epsilon_end"] = config_.epsilon_end;
  j["epsilon_steps"] = config_.epsilon_steps;
  j["replay_capacity"] = config_.replay_capacity;
  j["replay_size"] = replay_.size();
  j["replay_added"] = replay_.added();
  j["replay_saved"] = with_replay;
  j["conv_filters"] = config_.shape.conv_filters;
  j["hidden_units"] = config_.shape.hidden_units;
  j["rng"]["replay_mask"] = mask_rng_.serialize();
  j["rng"]["sample"] = sample_rng_.serialize();
  j["rng"]["exploration"] = explore_rng_.serialize();
  std::ofstream(dir / "agent.json") << j.dump(2) << '\n';
  if (with_replay) {
    std::ofstream out(dir / "replay.bin", std::ios::binary);
    replay_.write(out);
    if (!out) throw FormatError("failed writing " + (dir / "replay.bin").string());
  }
}

void DqnAgent::load(const std::filesystem::path& dir, bool restore_replay) {
  std::ifstream in(dir / "agent.json");
  if (!in) throw FormatError("missing agent.json in " + dir.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("kind") != kind()) {
    throw ConfigError("checkpoint holds a '" + j.at("kind").get<std::string>() +
                      "' agent, expected 'dqn'");
  }
  online_ = nn::load_network(dir / "online.bin");
  target_ = nn::load_network(dir / "target.bin");
  if (!(online_.shape() == config_.shape)) {
    throw ConfigError("checkpoint network shape differs from the configuration");
  }
  {
    std::ifstream ain(dir / "adam.bin", std::ios::binary);
    if (!ain) throw FormatError("missing adam.bin in " + dir.string());
    optimizer_ = nn::read_adam(ain);
  }
  training_steps_ = j.at("training_steps").get<std::uint64_t>();
  mask_rng_ = Rng::deserialize(j.at("rng").at("replay_mask").get<std::string>());
  sample_rng_ = Rng::deserialize(j.at("rng").at("sample").get<std::string>());
  explore_rng_ = Rng::deserialize(j.at("rng").at("exploration").get<std::string>());
  if (!restore_replay) return;
  if (j.at("replay_saved").get<bool>()) {
    std::ifstream rin(dir / "replay.bin", std::ios::binary);
    if (!rin) throw FormatError("missing replay.bin in " + dir.string());
    replay_ = SharedReplayMemory::read(rin);
  } else if (j.at("replay_size").get<std::size_t>() > 0) {
    throw ConfigError("checkpoint " + dir.string() +
                      " was written without its replay memory; resume from the latest checkpoint");
  }
}

}  // namespace rpf::agent
