#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "rpf/env/types.hpp"

namespace CLI {
class App;
}

namespace rpf::env {

/// Registers one option per ScenarioConfig field ("--vehicle-count",
/// "--speed-min", ...). In config files the same keys are written with
/// underscores. With a non-empty group the options are listed under it in
/// --help.
void add_scenario_options(CLI::App& app, ScenarioConfig& config, const std::string& group = "");

/// Reads a key = value scenario file (TOML/INI syntax). Unknown keys and
/// malformed values throw ConfigError; the result is validated.
ScenarioConfig read_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& text);

/// Writes every field so that parse_scenario() reproduces the config exactly.
void write_scenario(std::ostream& out, const ScenarioConfig& config);

}  // namespace rpf::env
