#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gex/flip_model.hpp"

namespace gex::cli {

// Everything a subcommand reads. Parsed values only; validation happens in
// validate() before any work starts.
struct ExperimentConfig {
  std::string command;
  std::string model = "demasi";  // builtin name or path to a model JSON file
  double gamma = 5.0 / 12;
  double theta = 1.0;
  std::string decomposition = "auto";  // auto | greedy | explicit
  int d = 1;
  std::vector<int> L;
  double T = 0.0;  // 0 selects the command default
  std::string times;  // "a,b,c" or "start:stop:step"; empty selects the default
  long reps = 0;      // 0 selects the command default
  double eps = 0.25;
  double t_star = 0.0;  // mix only; 0 selects the default proxy time
  int k = 1;            // anticonc distance
  double zeta_rate = 0.0;  // anticonc; 0 selects 2 lambda of the model
  long coupling_seeds = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
  bool force_large = false;
};

// Model JSON: {"d": 1, "m": 1, "kind": "demasi"|"theta"|"constant"|"table",
//              "params": {"gamma": .., "theta": .., "value": ..}, "rates": [..]}.
// "rates" is read only for kind "table", in the code order of LocalRateTable.
Model load_model(const ExperimentConfig& cfg);

// Throws Error(InvalidArgument / ParameterOutOfRange) on malformed input and
// Error(DeskScaleExceeded) on sizes above the desk-scale limits.
void validate(const ExperimentConfig& cfg);

std::vector<double> parse_times(const std::string& spec);
std::vector<double> resolve_times(const ExperimentConfig& cfg, const std::vector<double>& fallback);

// Canonical JSON of the fields that determine the output; workers and the
// output path are excluded since they do not change results.
nlohmann::json canonical(const ExperimentConfig& cfg);
// FNV-1a 64 of canonical(cfg).dump(), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace gex::cli
