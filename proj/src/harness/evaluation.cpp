#include "rpf/harness/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "rpf/agent/worker_pool.hpp"
#include "rpf/env/heuristic.hpp"
#include "rpf/error.hpp"
#include "rpf/harness/returns.hpp"
#include "rpf/io/csv.hpp"

namespace rpf::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_double(const std::string& field) {
  if (field.empty() || field == "nan") return kNaN;
  if (field == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(field, &used);
  if (used != field.size()) throw FormatError("bad number '" + field + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& field) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(field, &used);
  if (used != field.size()) throw FormatError("bad integer '" + field + "'");
  return v;
}

void add_optional(io::CsvRow& row, double v) {
  if (std::isnan(v)) {
    row.add("");
  } else {
    row.add(v);
  }
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {kNaN, kNaN};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(v.size()))};
}

}  // namespace

Policy heuristic_policy(const env::EnvParams& params) {
  return [params](const env::TrafficState& state, const Observation&) {
    return Decision{env::heuristic_driver_policy(state, params), std::nullopt};
  };
}

Policy constant_policy(std::size_t action) {
  if (action >= kNumActions) throw ConfigError("action index out of range");
  return [action](const env::TrafficState&, const Observation&) {
    return Decision{action, std::nullopt};
  };
}

Policy ensemble_policy(const agent::EnsembleAgent& agent, std::optional<double> gate_threshold) {
  return [&agent, gate_threshold](const env::TrafficState&, const Observation& obs) {
    const std::vector<QVector> q = agent.ensemble_q(obs);
    safety::UncertaintyReport report =
        gate_threshold ? safety::select_safe_action(q, *gate_threshold) : safety::describe(q);
    return Decision{report.action, report};
  };
}

Policy greedy_policy(const agent::Learner& learner, std::optional<double> gate_threshold) {
  if (const auto* ensemble = dynamic_cast<const agent::EnsembleAgent*>(&learner)) {
    if (ensemble->size() >= 2) return ensemble_policy(*ensemble, gate_threshold);
  }
  if (gate_threshold) throw ConfigError("the safety gate needs an ensemble of at least two members");
  return [&learner](const env::TrafficState&, const Observation& obs) {
    return Decision{learner.greedy_action(obs), std::nullopt};
  };
}

EpisodeResult run_episode(const env::Highway& highway, env::ScenarioConfig scenario,
                          std::uint64_t seed, const Policy& policy,
                          const std::function<void(const StepRecord&)>& observer) {
  scenario.seed = seed;
  env::TrafficState state = highway.reset(scenario);
  EpisodeResult result;
  result.seed = seed;
  ReturnAccumulator ret(kReturnDiscount);
  while (true) {
    const Observation obs = highway.observe(state);
    const Decision decision = policy(state, obs);
    if (decision.action >= kNumActions) throw std::logic_error("policy returned an invalid action");
    if (decision.report) {
      result.chosen_cv.push_back(decision.report->cv[decision.action]);
      result.fallbacks += decision.report->fallback_used;
    }
    env::StepOutcome out = highway.step(state, decision.action);
    ret.add(out.reward);
    ++result.steps;
    if (observer) observer(StepRecord{result.steps, &state, &obs, &decision, &out});
    if (out.terminated) {
      result.crashed = out.events.crashed();
      break;
    }
    state = std::move(out.next);
  }
  result.discounted_return = ret.value();
  return result;
}

std::vector<std::uint64_t> suite_seeds(std::uint64_t master_seed, std::size_t episodes) {
  Rng rng(derive_seed(master_seed, "evaluation-suite"));
  std::vector<std::uint64_t> seeds(episodes);
  for (std::uint64_t& s : seeds) s = rng.next();
  return seeds;
}

Baseline compute_baseline(const env::Highway& highway, const env::ScenarioConfig& scenario,
                          const std::vector<std::uint64_t>& seeds, std::size_t threads) {
  const Policy policy = heuristic_policy(highway.params());
  std::vector<EpisodeResult> results(seeds.size());
  agent::WorkerPool pool(threads);
  pool.run(seeds.size(), [&](std::size_t i) {
    results[i] = run_episode(highway, scenario, seeds[i], policy);
  });
  Baseline b;
  b.seeds = seeds;
  for (const EpisodeResult& r : results) {
    b.returns.push_back(r.discounted_return);
    b.crashed.push_back(r.crashed);
  }
  return b;
}

void write_baseline(std::ostream& out, const Baseline& baseline) {
  out << "episode,seed,return,crashed\n";
  for (std::size_t i = 0; i < baseline.seeds.size(); ++i) {
    io::CsvRow row;
    row.add(i)
        .add(static_cast<unsigned long long>(baseline.seeds[i]))
        .add(baseline.returns[i])
        .add(static_cast<bool>(baseline.crashed[i]));
    row.write(out);
  }
}

Baseline read_baseline(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "episode,seed,return,crashed") {
    throw FormatError("not a baseline file");
  }
  Baseline b;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 4) throw FormatError("baseline row with " + std::to_string(f.size()) + " fields");
    b.seeds.push_back(parse_u64(f[1]));
    b.returns.push_back(parse_double(f[2]));
    b.crashed.push_back(f[3] == "1");
  }
  return b;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double w = rank - static_cast<double>(lo);
  if (w == 0.0) return values[lo];
  return values[lo] + w * (values[hi] - values[lo]);
}

EvaluationResult evaluate_suite(const env::Highway& highway, const env::ScenarioConfig& scenario,
                                const Baseline* baseline, const Policy& policy,
                                std::size_t threads, std::vector<EpisodeResult>* episodes) {
  if (baseline == nullptr || baseline->seeds.empty()) {
    throw UsageError("no heuristic-driver baseline for this suite; run the 'baseline' command first");
  }
  const std::vector<std::uint64_t>& seeds = baseline->seeds;
  std::vector<EpisodeResult> results(seeds.size());
  agent::WorkerPool pool(threads);
  pool.run(seeds.size(), [&](std::size_t i) {
    results[i] = run_episode(highway, scenario, seeds[i], policy);
  });

  EvaluationResult r;
  r.episodes = results.size();
  std::vector<double> normalized;
  std::vector<double> cvs;
  double sum_return = 0.0;
  std::size_t safe = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const double reference = baseline->returns[i];
    if (!(reference > 0.0)) {
      throw ConfigError("heuristic-driver return " + io::format_number(reference) + " on seed " +
                        std::to_string(seeds[i]) + " cannot normalize returns");
    }
    normalized.push_back(results[i].discounted_return / reference);
    sum_return += results[i].discounted_return;
    safe += !results[i].crashed;
    cvs.insert(cvs.end(), results[i].chosen_cv.begin(), results[i].chosen_cv.end());
  }
  r.collision_free_fraction = static_cast<double>(safe) / static_cast<double>(r.episodes);
  std::tie(r.mean_normalized_return, r.normalized_return_std) = mean_std(normalized);
  r.mean_return = sum_return / static_cast<double>(r.episodes);
  std::tie(r.cv_mean, r.cv_std) = mean_std(cvs);
  r.cv_p1 = percentile(cvs, 1.0);
  r.cv_p50 = percentile(cvs, 50.0);
  r.cv_p99 = percentile(cvs, 99.0);
  if (episodes) *episodes = std::move(results);
  return r;
}

std::string metrics_csv_header() {
  return "training_step,episodes,collision_free_fraction,mean_normalized_return,"
         "normalized_return_std,mean_return,cv_mean,cv_std,cv_p1,cv_p50,cv_p99";
}

void write_metrics_row(std::ostream& out, const EvaluationResult& r) {
  io::CsvRow row;
  row.add(static_cast<unsigned long long>(r.training_step))
      .add(r.episodes)
      .add(r.collision_free_fraction)
      .add(r.mean_normalized_return)
      .add(r.normalized_return_std)
      .add(r.mean_return);
  for (double v : {r.cv_mean, r.cv_std, r.cv_p1, r.cv_p50, r.cv_p99}) add_optional(row, v);
  row.write(out);
}

std::vector<EvaluationResult> read_metrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) {
    throw FormatError("not a metrics file (unexpected header)");
  }
  std::vector<EvaluationResult> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 11) throw FormatError("metrics row with " + std::to_string(f.size()) + " fields");
    EvaluationResult r;
    r.training_step = parse_u64(f[0]);
    r.episodes = parse_u64(f[1]);
    r.collision_free_fraction = parse_double(f[2]);
    r.mean_normalized_return = parse_double(f[3]);
    r.normalized_return_std = parse_double(f[4]);
    r.mean_return = parse_double(f[5]);
    r.cv_mean = parse_double(f[6]);
    r.cv_std = parse_double(f[7]);
    r.cv_p1 = parse_double(f[8]);
    r.cv_p50 = parse_double(f[9]);
    r.cv_p99 = parse_double(f[10]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<EvaluationResult> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return read_metrics(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace rpf::harness
