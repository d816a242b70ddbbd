#pragma once

#include "config.hpp"

namespace gex::cli {

// Each command validates nothing itself (main calls validate first) and
// writes its results to cfg.out or stdout. Commands with a second, scalar
// report write it as JSON to cfg.out + ".json" (after the CSV on stdout).
void cmd_classify(const ExperimentConfig& cfg);
void cmd_hydro(const ExperimentConfig& cfg);
void cmd_mix(const ExperimentConfig& cfg);
void cmd_dual(const ExperimentConfig& cfg);
void cmd_anticonc(const ExperimentConfig& cfg);
void cmd_regions(const ExperimentConfig& cfg);

}  // namespace gex::cli
