#include "rpf/agent/ensemble.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

#include "rpf/error.hpp"
#include "rpf/nn/checkpoint.hpp"
#include "rpf/nn/loss.hpp"

namespace rpf::agent {

namespace {

QVector add_scaled(QVector q, const QVector& p, double beta) {
  for (std::size_t a = 0; a < kNumActions; ++a) q[a] += beta * p[a];
  return q;
}

std::string member_file(std::size_t k, const char* what) {
  return "member_" + std::to_string(k) + "_" + what + ".bin";
}

void save_adam(const std::filesystem::path& path, const nn::AdamState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  nn::write_adam(out, state);
}

nn::AdamState load_adam(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  return nn::read_adam(in);
}

}  // namespace

QVector member_q(const EnsembleMember& member, double beta, const Observation& obs) {
  QVector q = nn::forward(member.trainable, obs);
  if (beta != 0.0) q = add_scaled(q, nn::forward(member.prior, obs), beta);
  return q;
}

double train_step_member(EnsembleMember& member, double beta,
                         std::span<const Experience* const> batch, const LearningParams& params,
                         UpdateScratch& scratch) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  if (!(scratch.gradient.shape() == member.trainable.shape())) {
    scratch.gradient = nn::NetworkParams(member.trainable.shape());
  }
  scratch.gradient.fill(0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Experience* e : batch) {
    double target = e->reward;
    if (!e->terminal) {
      // Online (prior-augmented) selects, target (prior-augmented) evaluates.
      QVector online_next = nn::forward(member.trainable, e->next_observation);
      QVector target_next = nn::forward(member.target, e->next_observation);
      if (beta != 0.0) {
        const QVector prior_next = nn::forward(member.prior, e->next_observation);
        online_next = add_scaled(online_next, prior_next, beta);
        target_next = add_scaled(target_next, prior_next, beta);
      }
      target += params.gamma * target_next[argmax(online_next)];
    }
    const QVector f = nn::forward(member.trainable, e->observation, scratch.cache);
    double q = f[e->action];
    if (beta != 0.0) q += beta * nn::forward(member.prior, e->observation)[e->action];
    const nn::HuberResult h = nn::huber_loss(target - q, params.huber_delta);
    loss += h.loss;
    // d loss / d q = -huber'(y - q); the prior term is a constant here.
    QVector dq{};
    dq[e->action] = -h.derivative * scale;
    nn::backward(member.trainable, e->observation, scratch.cache, dq, scratch.gradient);
  }
  nn::adam_step(member.trainable, member.optimizer, scratch.gradient, params.learning_rate);
  return loss * scale;
}

EnsembleAgent::EnsembleAgent(const EnsembleConfig& config, std::uint64_t seed)
    : config_(config),
      replay_(config.replay_capacity, config.members),
      mask_rng_(derive_seed(seed, "replay-mask")),
      choice_rng_(derive_seed(seed, "member-choice")) {
  if (config.members == 0) throw ConfigError("ensemble needs at least one member");
  if (!(config.p_add >= 0.0 && config.p_add <= 1.0)) throw ConfigError("p_add must lie in [0, 1]");
  if (config.learning.batch_size == 0) throw ConfigError("batch size must be positive");
  if (config.target_update == 0) throw ConfigError("target update period must be positive");
  if (!(config.prior_scale >= 0.0)) throw ConfigError("prior scale must be >= 0");
  members_.reserve(config.members);
  for (std::size_t k = 0; k < config.members; ++k) {
    EnsembleMember m(config.shape);
    Rng init(derive_seed(seed, "trainable", k));
    m.trainable = nn::init_network(init, config.shape);
    m.target = m.trainable;
    Rng prior(derive_seed(seed, "prior", k));
    m.prior = nn::init_network(prior, config.shape);
    members_.push_back(std::move(m));
    scratch_.push_back(UpdateScratch{{}, nn::NetworkParams(config.shape)});
    sample_rngs_.emplace_back(derive_seed(seed, "sample", k));
  }
  pool_ = std::make_unique<WorkerPool>(std::min(config.threads, config.members));
}

QVector EnsembleAgent::member_q(std::size_t k, const Observation& obs) const {
  return agent::member_q(members_.at(k), config_.prior_scale, obs);
}

std::vector<QVector> EnsembleAgent::ensemble_q(const Observation& obs) const {
  std::vector<QVector> out;
  out.reserve(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k) out.push_back(member_q(k, obs));
  return out;
}

std::size_t EnsembleAgent::select_training_action(std::size_t k, const Observation& obs) const {
  return argmax(member_q(k, obs));
}

std::size_t EnsembleAgent::mean_greedy_action(const Observation& obs) const {
  QVector mean{};
  const std::vector<QVector> q = ensemble_q(obs);
  for (std::size_t a = 0; a < kNumActions; ++a) {
    double sum = 0.0;
    for (const QVector& m : q) sum += m[a];
    mean[a] = sum / static_cast<double>(q.size());
  }
  return argmax(mean);
}

std::size_t EnsembleAgent::add_experience(Experience e) {
  return replay_.add(std::move(e), config_.p_add, mask_rng_);
}

std::vector<std::optional<double>> EnsembleAgent::train_all() {
  std::vector<std::optional<double>> losses(members_.size());
  // Each task touches only its own member, scratch and sampling stream;
  // the replay memory is read-only here, so the schedule cannot change results.
  pool_->run(members_.size(), [&](std::size_t k) {
    const auto picks = replay_.sample(k, config_.learning.batch_size, sample_rngs_[k]);
    if (!picks) return;
    std::vector<const Experience*> batch;
    batch.reserve(picks->size());
    for (std::size_t slot : *picks) batch.push_back(&replay_.at(slot));
    losses[k] =
        train_step_member(members_[k], config_.prior_scale, batch, config_.learning, scratch_[k]);
  });
  ++training_steps_;
  if (training_steps_ % config_.target_update == 0) sync_targets();
  return losses;
}

void EnsembleAgent::sync_targets() {
  for (EnsembleMember& m : members_) m.target = m.trainable;
}

void EnsembleAgent::begin_episode() { active_ = choice_rng_.uniform_index(members_.size()); }

std::size_t EnsembleAgent::training_action(const Observation& obs, std::uint64_t) {
  if (!active_) throw UsageError("training_action() before begin_episode()");
  return select_training_action(*active_, obs);
}

std::vector<std::optional<double>> EnsembleAgent::after_step(std::uint64_t env_steps) {
  if (env_steps < config_.learning_start) return {};
  return train_all();
}

void EnsembleAgent::save(const std::filesystem::path& dir, bool with_replay) const {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < members_.size(); ++k) {
    nn::save_network(dir / member_file(k, "trainable"), members_[k].trainable);
    nn::save_network(dir / member_file(k, "target"), members_[k].target);
    nn::save_network(dir / member_file(k, "prior"), members_[k].prior);
    save_adam(dir / member_file(k, "adam"), members_[k].optimizer);
  }
  nlohmann::ordered_json j;
  j["kind"] = kind();
  j["members"] = members_.size();
  j["prior_scale"] = config_.prior_scale;
  j["training_steps"] = training_steps_;
  j["p_add"] = config_.p_add;
  j["replay_capacity"] = config_.replay_capacity;
  j["replay_size"] = replay_.size();
  j["replay_added"] = replay_.added();
  j["replay_saved"] = with_replay;
  j["conv_filters"] = config_.shape.conv_filters;
  j["hidden_units"] = config_.shape.hidden_units;
  j["active_member"] = active_ ? nlohmann::json(*active_) : nlohmann::json(nullptr);
  j["rng"]["replay_mask"] = mask_rng_.serialize();
  j["rng"]["member_choice"] = choice_rng_.serialize();
  for (const Rng& r : sample_rngs_) j["rng"]["sample"].push_back(r.serialize());
  std::ofstream(dir / "agent.json") << j.dump(2) << '\n';
  if (with_replay) {
    std::ofstream out(dir / "replay.bin", std::ios::binary);
    replay_.write(out);
    if (!out) throw FormatError("failed writing " + (dir / "replay.bin").string());
  }
}

void EnsembleAgent::load(const std::filesystem::path& dir, bool restore_replay) {
  std::ifstream in(dir / "agent.json");
  if (!in) throw FormatError("missing agent.json in " + dir.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("kind") != kind()) {
    throw ConfigError("checkpoint holds a '" + j.at("kind").get<std::string>() +
                      "' agent, expected 'rpf'");
  }
  if (j.at("members").get<std::size_t>() != members_.size() ||
      j.at("prior_scale").get<double>() != config_.prior_scale) {
    throw ConfigError("checkpoint ensemble size or prior scale differs from the configuration");
  }
  for (std::size_t k = 0; k < members_.size(); ++k) {
    EnsembleMember& m = members_[k];
    m.trainable = nn::load_network(dir / member_file(k, "trainable"));
    m.target = nn::load_network(dir / member_file(k, "target"));
    m.prior = nn::load_network(dir / member_file(k, "prior"));
    m.optimizer = load_adam(dir / member_file(k, "adam"));
    if (!(m.trainable.shape() == config_.shape)) {
      throw ConfigError("checkpoint network shape differs from the configuration");
    }
  }
  training_steps_ = j.at("training_steps").get<std::uint64_t>();
  active_.reset();
  if (!j.at("active_member").is_null()) active_ = j.at("active_member").get<std::size_t>();
  mask_rng_ = Rng::deserialize(j.at("rng").at("replay_mask").get<std::string>());
  choice_rng_ = Rng::deserialize(j.at("rng").at("member_choice").get<std::string>());
  for (std::size_t k = 0; k < members_.size(); ++k) {
    sample_rngs_[k] = Rng::deserialize(j.at("rng").at("sample").at(k).get<std::string>());
  }
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
