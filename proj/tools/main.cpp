#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "gex/error.hpp"

namespace {

// Exit codes: 0 success, 1 unexpected failure, 2 bad configuration,
// 3 runtime guard (size caps, desk-scale limits).
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGuard = 3;

void add_common(CLI::App* sub, gex::cli::ExperimentConfig& cfg) {
  sub->add_option("--model", cfg.model, "demasi, theta, constant, or a model JSON file");
  sub->add_option("--gamma", cfg.gamma, "De Masi parameter");
  sub->add_option("--theta", cfg.theta, "theta model parameter");
  sub->add_option("--decomposition", cfg.decomposition, "auto, greedy or explicit");
  sub->add_option("--d", cfg.d, "dimension (1 or 2)");
  sub->add_option("--L", cfg.L, "side length(s)")->delimiter(',');
  sub->add_option("--T", cfg.T, "horizon; 0 selects the command default");
  sub->add_option("--times", cfg.times, "a,b,c or start:stop:step");
  sub->add_option("--reps", cfg.reps, "replicas; 0 selects the command default");
  sub->add_option("--eps", cfg.eps, "mixing threshold");
  sub->add_option("--t-star", cfg.t_star, "stationary proxy time (mix)");
  sub->add_option("--k", cfg.k, "distance threshold (anticonc)");
  sub->add_option("--zeta-rate", cfg.zeta_rate, "rate of the exponential time (anticonc); 0 selects 2 lambda");
  sub->add_option("--coupling-seeds", cfg.coupling_seeds, "seeds per L for the coupling table (dual)");
  sub->add_option("--seed", cfg.seed, "master seed");
  sub->add_option("--workers", cfg.workers, "threads; results do not depend on it");
  sub->add_option("--out", cfg.out, "output file (default stdout)");
  sub->add_flag("--force-large", cfg.force_large, "allow sizes above the desk-scale limits");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gex::cli;
  CLI::App app{"Glauber-Exclusion process simulator", "gex"};
  app.set_version_flag("--version", GEX_VERSION);
  app.require_subcommand(1);

  ExperimentConfig cfg;
  const std::map<std::string, std::pair<std::string, std::function<void(const ExperimentConfig&)>>> commands{
      {"classify", {"regime, roots and decomposition of a model (JSON)", cmd_classify}},
      {"hydro", {"mean-field ODE and derived functions (CSV)", cmd_hydro}},
      {"mix", {"mixing profile and mixing-time bracket (CSV + JSON)", cmd_mix}},
      {"dual", {"dual survival functions and coupling failure table (CSV + JSON)", cmd_dual}},
      {"anticonc", {"two-walker anticoncentration (CSV)", cmd_anticonc}},
      {"regions", {"red/blue/green region counts over time (CSV)", cmd_regions}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    add_common(sub, cfg);
    sub->callback([&cfg, name = name] { cfg.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    validate(cfg);
    commands.at(cfg.command).second(cfg);
  } catch (const gex::Error& e) {
    std::cerr << "gex: " << gex::to_string(e.code()) << ": " << e.what() << "\n";
    return gex::is_runtime_guard(e.code()) ? kExitGuard : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "gex: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
