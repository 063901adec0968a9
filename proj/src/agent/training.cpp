#include "rpf/agent/training.hpp"

#include <json.hpp>

#include "rpf/error.hpp"
#include "rpf/io/csv.hpp"

namespace rpf::agent {

using nlohmann::json;

TrainingLog::TrainingLog(std::ostream& out, bool write_header) : out_(out) {
  if (write_header) out_ << "training_step,episode,member_k,loss_mean,episode_return\n";
}

namespace {

void add_member(io::CsvRow& row, std::optional<std::size_t> member) {
  if (member) {
    row.add(*member);
  } else {
    row.add("");
  }
}

json vehicle_to_json(const env::Vehicle& v) {
  return json{{"id", v.id},
              {"x", v.x},
              {"y", v.y},
              {"vx", v.vx},
              {"vy", v.vy},
              {"lane", v.lane},
              {"target_lane", v.target_lane},
              {"length", v.length},
              {"desired_speed", v.desired_speed},
              {"lane_change_progress", v.lane_change_progress},
              {"driver", static_cast<int>(v.driver)}};
}

env::Vehicle vehicle_from_json(const json& j) {
  env::Vehicle v;
  v.id = j.at("id");
  v.x = j.at("x");
  v.y = j.at("y");
  v.vx = j.at("vx");
  v.vy = j.at("vy");
  v.lane = j.at("lane");
  v.target_lane = j.at("target_lane");
  v.length = j.at("length");
  v.desired_speed = j.at("desired_speed");
  v.lane_change_progress = j.at("lane_change_progress");
  v.driver = static_cast<env::Driver>(j.at("driver").get<int>());
  return v;
}

}  // namespace

void TrainingLog::loss(std::uint64_t training_step, std::uint64_t episode,
                       std::optional<std::size_t> member, double loss_mean) {
  io::CsvRow row;
  row.add(static_cast<unsigned long long>(training_step))
      .add(static_cast<unsigned long long>(episode));
  add_member(row, member);
  row.add(loss_mean).add("");
  row.write(out_);
}

void TrainingLog::episode(std::uint64_t training_step, std::uint64_t episode,
                          std::optional<std::size_t> member, double episode_return) {
  io::CsvRow row;
  row.add(static_cast<unsigned long long>(training_step))
      .add(static_cast<unsigned long long>(episode));
  add_member(row, member);
  row.add("").add(episode_return);
  row.write(out_);
}

Trainer::Trainer(Learner& learner, const env::Highway& highway, env::ScenarioConfig scenario,
                 std::uint64_t seed, std::uint64_t loss_log_interval)
    : learner_(learner),
      highway_(highway),
      scenario_(std::move(scenario)),
      loss_log_interval_(loss_log_interval == 0 ? 1 : loss_log_interval),
      episode_rng_(derive_seed(seed, "training-episodes")) {
  env::validate(scenario_);
}

void Trainer::run_until(std::uint64_t target) {
  while (env_steps_ < target) {
    if (!state_) {
      env::ScenarioConfig episode = scenario_;
      episode.seed = episode_rng_.next();
      state_ = highway_.reset(episode);
      episode_return_ = 0.0;
      learner_.begin_episode();
    }
    const Observation obs = highway_.observe(*state_);
    const std::size_t action = learner_.training_action(obs, env_steps_);
    env::StepOutcome out = highway_.step(*state_, action);
    episode_return_ += out.reward;
    ++env_steps_;

    // Timeouts are not true terminal states; keep them out of the memory.
    const bool timeout = out.terminated && !out.events.crashed();
    if (!timeout) {
      learner_.store(Experience{obs, action, out.reward, highway_.observe(out.next),
                                out.terminated});
      ++stored_;
    }

    const auto losses = learner_.after_step(env_steps_);
    if (!losses.empty()) {
      if (window_.sum.size() < losses.size()) {
        window_.sum.resize(losses.size(), 0.0);
        window_.count.resize(losses.size(), 0);
      }
      for (std::size_t k = 0; k < losses.size(); ++k) {
        if (!losses[k]) continue;
        window_.sum[k] += *losses[k];
        ++window_.count[k];
      }
      if (learner_.training_steps() % loss_log_interval_ == 0) flush_losses();
    }

    if (out.terminated) {
      if (log_) log_->episode(learner_.training_steps(), episodes_, learner_.active_member(),
                              episode_return_);
      ++episodes_;
      state_.reset();
    } else {
      state_ = std::move(out.next);
    }
  }
}

void Trainer::flush_losses() {
  const bool single = window_.sum.size() == 1 && !learner_.active_member();
  for (std::size_t k = 0; k < window_.sum.size(); ++k) {
    if (window_.count[k] == 0) continue;
    if (log_) {
      log_->loss(learner_.training_steps(), episodes_,
                 single ? std::nullopt : std::optional<std::size_t>(k),
                 window_.sum[k] / static_cast<double>(window_.count[k]));
    }
    window_.sum[k] = 0.0;
    window_.count[k] = 0;
  }
}

std::string Trainer::save_state() const {
  json j;
  j["env_steps"] = env_steps_;
  j["episodes"] = episodes_;
  j["stored"] = stored_;
  j["episode_rng"] = episode_rng_.serialize();
  j["episode_return"] = episode_return_;
  j["loss_window"]["sum"] = window_.sum;
  j["loss_window"]["count"] = window_.count;
  if (state_) {
    json s;
    s["elapsed_steps"] = state_->elapsed_steps;
    s["terminated"] = state_->terminated;
    for (const env::Vehicle& v : state_->vehicles) s["vehicles"].push_back(vehicle_to_json(v));
    j["state"] = s;
  } else {
    j["state"] = nullptr;
  }
  return j.dump(2);
}

void Trainer::restore_state(const std::string& text) {
  const json j = json::parse(text);
  env_steps_ = j.at("env_steps");
  episodes_ = j.at("episodes");
  stored_ = j.at("stored");
  episode_rng_ = Rng::deserialize(j.at("episode_rng").get<std::string>());
  episode_return_ = j.at("episode_return");
  window_.sum = j.at("loss_window").at("sum").get<std::vector<double>>();
  window_.count = j.at("loss_window").at("count").get<std::vector<std::uint64_t>>();
  state_.reset();
  if (!j.at("state").is_null()) {
    env::TrafficState s;
    s.elapsed_steps = j.at("state").at("elapsed_steps");
    s.terminated = j.at("state").at("terminated");
    for (const json& v : j.at("state").at("vehicles")) s.vehicles.push_back(vehicle_from_json(v));
    state_ = std::move(s);
  }
}

}  // namespace rpf::agent
