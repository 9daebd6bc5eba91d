#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "pidtune/agent.hpp"

namespace pidtune {

/// Invalid configuration (bad key, bad value, violated invariant).
/// Reported to the user and mapped to exit code 2 by the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything one seeded experiment needs. Defaults are the Case I values;
/// the case2 preset switches to the Case II column.
struct ExperimentConfig {
  Algorithm algo = Algorithm::Emtd3;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: no artifact files are written

  PlantModel plant{};
  EpisodeConfig episode{};
  AgentConfig agent{};
  Schedules schedules{};

  bool stop_on_plateau = false;
  int plateau_window = 10;
  int plateau_patience = 30;
  double plateau_tol = 1.0;
};

ExperimentConfig case1_config();
ExperimentConfig case2_config();
ExperimentConfig preset_config(const std::string& name);  // throws ConfigError

/// Applies one key = value assignment. Unknown keys and malformed values
/// throw ConfigError.
void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Applies a flat key = value file ('#' starts a comment). Errors carry
/// "path:line:" prefixes.
void apply_config_file(ExperimentConfig& cfg, const std::string& path);

/// Checks every invariant; throws ConfigError describing the violation.
void validate(const ExperimentConfig& cfg);

/// Full key = value listing; feeding it back through apply_config_file
/// reproduces the configuration exactly.
std::string serialize_config(const ExperimentConfig& cfg);

/// Parses a key = value file into a map without interpreting the keys
/// (used to compare run configurations).
std::map<std::string, std::string> read_kv_file(const std::string& path);

std::string algorithm_name(Algorithm algo);

}  // namespace pidtune
