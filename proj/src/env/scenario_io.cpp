#include "rpf/env/scenario_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <sstream>

#include "rpf/error.hpp"
#include "rpf/io/csv.hpp"

namespace rpf::env {

namespace {

struct Field {
  const char* key;
  double ScenarioConfig::*member;
  const char* help;
};

constexpr Field kRealFields[] = {
    {"speed_min", &ScenarioConfig::speed_min, "lowest desired speed of surrounding cars, m/s"},
    {"speed_max", &ScenarioConfig::speed_max, "highest desired speed of surrounding cars, m/s"},
    {"ego_start", &ScenarioConfig::ego_start, "initial ego position, m"},
    {"ego_speed_min", &ScenarioConfig::ego_speed_min, "lowest initial ego speed, m/s"},
    {"ego_speed_max", &ScenarioConfig::ego_speed_max, "highest initial ego speed, m/s"},
    {"spawn_span", &ScenarioConfig::spawn_span, "cars start within this distance of the ego, m"},
    {"spawn_clearance", &ScenarioConfig::spawn_clearance, "minimum start offset from the ego, m"},
    {"stopped_distance", &ScenarioConfig::stopped_distance, "stopped car ahead of the ego, m"},
    {"slow_speed_min", &ScenarioConfig::slow_speed_min, "slow center-lane cars, lowest speed, m/s"},
    {"slow_speed_max", &ScenarioConfig::slow_speed_max, "slow center-lane cars, highest speed, m/s"},
    {"speeder_speed", &ScenarioConfig::speeder_speed, "speeding car speed, m/s"},
    {"speeder_offset", &ScenarioConfig::speeder_offset, "speeding car start relative to the ego, m"},
    {"slow_leader_distance", &ScenarioConfig::slow_leader_distance, "slow leader ahead of the ego, m"},
    {"slow_leader_speed", &ScenarioConfig::slow_leader_speed, "slow leader speed, m/s"},
    {"oncoming_speed", &ScenarioConfig::oncoming_speed, "oncoming car speed (negative), m/s"},
    {"oncoming_distance", &ScenarioConfig::oncoming_distance, "oncoming car start ahead of the ego, m"},
};

// "--speed-min,--speed_min": the dashed form for the command line, the
// underscored one so config-file keys match.
std::string flag_name(const char* key) {
  std::string dashed = key;
  for (char& c : dashed) {
    if (c == '_') c = '-';
  }
  return "--" + dashed + ",--" + key;
}

}  // namespace

void add_scenario_options(CLI::App& app, ScenarioConfig& config, const std::string& group) {
  std::vector<CLI::Option*> added;
  added.push_back(app.add_option_function<std::string>(
                         "--kind",
                         [&config](const std::string& name) {
                           config.kind = scenario_kind_from_string(name);
                         },
                         "scenario kind: nominal, stopped, speeder, oncoming")
                      ->check(CLI::IsMember({"nominal", "stopped", "speeder", "oncoming"})));
  added.push_back(app.add_option(flag_name("scenario_seed"), config.seed, "episode seed"));
  added.push_back(app.add_option(flag_name("vehicle_count"), config.vehicle_count, "surrounding cars"));
  added.push_back(app.add_option(flag_name("slow_center_vehicles"), config.slow_center_vehicles,
                                 "slow center-lane cars in the stopped-vehicle scenario"));
  for (const Field& f : kRealFields) {
    added.push_back(app.add_option(flag_name(f.key), config.*(f.member), f.help));
  }
  if (!group.empty()) {
    for (CLI::Option* opt : added) opt->group(group);
  }
}

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig config;
  CLI::App app;
  app.allow_config_extras(CLI::config_extras_mode::error);
  add_scenario_options(app, config);
  // Config files name the seed plainly.
  app.get_option("--scenario-seed")->configurable(false);
  app.add_option("--seed", config.seed);
  std::istringstream in(text);
  try {
    app.parse_from_stream(in);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string("scenario file: ") + e.what());
  }
  validate(config);
  return config;
}

ScenarioConfig read_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_scenario(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_scenario(std::ostream& out, const ScenarioConfig& config) {
  out << "kind = \"" << to_string(config.kind) << "\"\n";
  out << "seed = " << config.seed << '\n';
  out << "vehicle_count = " << config.vehicle_count << '\n';
  out << "slow_center_vehicles = " << config.slow_center_vehicles << '\n';
  for (const Field& f : kRealFields) {
    out << f.key << " = " << io::format_number(config.*(f.member)) << '\n';
  }
}

}  // namespace rpf::env
