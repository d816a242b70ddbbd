#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gex/analysis.hpp"
#include "gex/dual.hpp"
#include "gex/error.hpp"
#include "gex/graphical.hpp"
#include "gex/hydrodynamics.hpp"
#include "gex/parallel.hpp"
#include "gex/rng.hpp"

#ifndef GEX_VERSION
#define GEX_VERSION "unknown"
#endif

namespace gex::cli {

namespace {

constexpr std::uint64_t kRegionsStream = 0x7265676e73ULL;  // "regns"

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json header_json(const ExperimentConfig& cfg) {
  return {{"tool", "gex"}, {"version", GEX_VERSION}, {"config_hash", config_hash(cfg)}, {"seed", cfg.seed}};
}

// CSV destination with the provenance header as leading comment lines.
class CsvSink {
 public:
  explicit CsvSink(const ExperimentConfig& cfg) {
    if (!cfg.out.empty()) {
      file_.open(cfg.out);
      if (!file_) fail(ErrorCode::InvalidArgument, "cannot write " + cfg.out);
    }
    os() << "# gex " << GEX_VERSION << " " << cfg.command << " config_hash=" << config_hash(cfg)
         << " seed=" << cfg.seed << "\n";
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os() << (i ? "," : "") << cells[i];
    os() << "\n";
  }

 private:
  std::ofstream file_;
};

void write_json(const ExperimentConfig& cfg, nlohmann::json body, bool companion) {
  body["header"] = header_json(cfg);
  const std::string text = body.dump(2) + "\n";
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  const std::string path = companion ? cfg.out + ".json" : cfg.out;
  std::ofstream f(path);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  f << text;
}

int single_L(const ExperimentConfig& cfg, int fallback) {
  if (cfg.L.empty()) return fallback;
  if (cfg.L.size() != 1) fail(ErrorCode::InvalidArgument, cfg.command + " takes a single --L");
  return cfg.L.front();
}

std::vector<int> L_list(const ExperimentConfig& cfg, std::vector<int> fallback) {
  return cfg.L.empty() ? fallback : cfg.L;
}

Torus model_torus(const Model& model, const ExperimentConfig& cfg, int L) {
  if (model.rates.d() != cfg.d)
    fail(ErrorCode::InvalidArgument, "model dimension " + std::to_string(model.rates.d()) + " differs from --d");
  return Torus(model.rates.d(), L);
}

double ode_step(const ReactionPolynomial& p) { return std::min(1e-3, 0.25 / std::max(p.derivative_bound(), 1e-12)); }

// Linear interpolation of a uniform-step series.
double sample(const std::vector<double>& v, double h, double t) {
  const double x = t / h;
  const auto i = static_cast<std::size_t>(std::floor(x));
  if (i + 1 >= v.size()) return v.back();
  const double w = x - static_cast<double>(i);
  return (1.0 - w) * v[i] + w * v[i + 1];
}

}  // namespace

void cmd_classify(const ExperimentConfig& cfg) {
  const Model model = load_model(cfg);
  const ReactionPolynomial p = reaction_polynomial(model.rates);
  const RegimeReport r = classify_regime(p);
  nlohmann::json roots = nlohmann::json::array();
  for (const RegimeRoot& root : r.roots) roots.push_back({{"rho", root.rho}, {"tangential", root.tangential}});
  std::vector<double> lambdas;
  for (const auto& e : model.dec.entries()) lambdas.push_back(e.lambda);
  nlohmann::json out{{"model", model.name},
                     {"d", model.rates.d()},
                     {"m", model.rates.m()},
                     {"regime", to_string(r.regime)},
                     {"roots", roots},
                     {"slope", r.slope},
                     {"R_coeffs", p.coeffs()},
                     {"decomposition",
                      {{"q", model.dec.q()},
                       {"lambda_total", model.dec.lambda_total()},
                       {"rho_bar", model.dec.rho_bar()},
                       {"lambdas", lambdas}}}};
  write_json(cfg, out, false);
}

void cmd_hydro(const ExperimentConfig& cfg) {
  const Model model = load_model(cfg);
  const double T = cfg.T > 0.0 ? cfg.T : 10.0;
  const std::vector<double> times = resolve_times(cfg, parse_times("0:" + fmt(T) + ":0.1"));
  if (times.back() > T + 1e-12) fail(ErrorCode::InvalidArgument, "times exceed --T");
  const ReactionPolynomial p = reaction_polynomial(model.rates);
  const double h = ode_step(p);
  const DerivedFunctions f = derived_functions(p, T, h);
  CsvSink sink(cfg);
  sink.row({"t", "rho_plus", "rho_minus", "phi", "theta"});
  for (double t : times)
    sink.row({fmt(t), fmt(sample(f.rho_plus, h, t)), fmt(sample(f.rho_minus, h, t)), fmt(sample(f.phi, h, t)),
              fmt(sample(f.theta, h, t))});
}

void cmd_mix(const ExperimentConfig& cfg) {
  const Model model = load_model(cfg);
  const Torus torus = model_torus(model, cfg, single_L(cfg, 64));
  MixingOptions opt;
  opt.workers = cfg.workers;
  double horizon = cfg.t_star;
  if (cfg.t_star > 0.0) {
    opt.t_star = cfg.t_star;
  } else {
    const RegimeReport r = classify_regime(reaction_polynomial(model.rates));
    if (r.regime != Regime::High)
      fail(ErrorCode::InvalidArgument, "outside the High regime pass --t-star for the stationary proxy");
    horizon = 4.0 * std::log(static_cast<double>(torus.N())) / (2.0 * std::fabs(r.slope));
  }
  const std::vector<double> times = resolve_times(cfg, parse_times("0.25:" + fmt(0.8 * horizon) + ":0.25"));
  const long reps = cfg.reps > 0 ? cfg.reps : 2048;
  const MixingProfile p = mixing_profile(model, torus, times, reps, cfg.seed, opt);
  const MixingTimeEstimate e = estimate_mixing_time(p, cfg.eps);
  {
    CsvSink sink(cfg);
    sink.row({"t", "d_up", "d_up_lo", "d_up_hi", "d_low", "d_low_lo", "d_low_hi"});
    for (std::size_t k = 0; k < p.times.size(); ++k)
      sink.row({fmt(p.times[k]), fmt(p.d_up[k]), fmt(p.d_up_lo[k]), fmt(p.d_up_hi[k]), fmt(p.d_low[k]),
                fmt(p.d_low_lo[k]), fmt(p.d_low_hi[k])});
  }
  nlohmann::json summary{{"L", torus.L()},
                         {"d", torus.d()},
                         {"reps", p.reps},
                         {"eps", cfg.eps},
                         {"t_star", p.t_star},
                         {"proxy_uncoalesced", p.proxy_uncoalesced},
                         {"t_mix_point", e.point},
                         {"t_mix_lower", e.lower},
                         {"t_mix_upper", e.upper},
                         {"has_lower", e.has_lower},
                         {"has_upper", e.has_upper},
                         {"bracketed", e.bracketed}};
  if (!p.warning.empty()) summary["warning"] = p.warning;
  write_json(cfg, summary, true);
}

void cmd_dual(const ExperimentConfig& cfg) {
  const Model model = load_model(cfg);
  const std::vector<double> times = resolve_times(cfg, parse_times("0.5:4:0.5"));
  const long reps = cfg.reps > 0 ? cfg.reps : 10000;
  const SurvivalEstimate s = estimate_survival_functions(model.dec, times, reps, cfg.seed, cfg.workers);
  {
    CsvSink sink(cfg);
    sink.row({"t", "phi", "phi_se", "psi", "psi_se", "theta", "theta_se", "extinct"});
    for (std::size_t k = 0; k < s.t.size(); ++k)
      sink.row({fmt(s.t[k]), fmt(s.phi[k]), fmt(s.phi_se[k]), fmt(s.psi[k]), fmt(s.psi_se[k]), fmt(s.theta[k]),
                fmt(s.theta_se[k]), std::to_string(s.extinct[k])});
  }
  // Coupling table: two neighbouring sites, as in the coupling-failure bound.
  const double T = cfg.T > 0.0 ? cfg.T : 30.0;
  nlohmann::json rows = nlohmann::json::array();
  for (int L : L_list(cfg, {64, 128, 256})) {
    const Torus torus = model_torus(model, cfg, L);
    std::vector<std::uint8_t> failed(static_cast<std::size_t>(cfg.coupling_seeds));
    parallel_for(failed.size(), cfg.workers, [&](std::size_t i) {
      failed[i] = !couple_bep_ibp(torus, {0, 1}, model.dec, T, derive_seed(cfg.seed, static_cast<std::uint64_t>(L), i))
                       .success;
    });
    const long f = std::count(failed.begin(), failed.end(), std::uint8_t{1});
    const Interval ci = wilson_interval(f, cfg.coupling_seeds);
    rows.push_back({{"L", L},
                    {"seeds", cfg.coupling_seeds},
                    {"failures", f},
                    {"failure_rate", static_cast<double>(f) / static_cast<double>(cfg.coupling_seeds)},
                    {"ci_lo", ci.lo},
                    {"ci_hi", ci.hi}});
  }
  write_json(cfg, {{"E", {0, 1}}, {"T", T}, {"coupling", rows}}, true);
}

void cmd_anticonc(const ExperimentConfig& cfg) {
  const Model model = load_model(cfg);
  const double rate = cfg.zeta_rate > 0.0 ? cfg.zeta_rate : 2.0 * model.dec.lambda_total();
  const long reps = cfg.reps > 0 ? cfg.reps : 100000;
  CsvSink sink(cfg);
  sink.row({"L", "estimate", "ci_lo", "ci_hi", "srw_estimate", "srw_ci_lo", "srw_ci_hi", "reps", "k", "zeta_rate"});
  for (int L : L_list(cfg, {128, 256, 512})) {
    const AnticoncentrationResult r =
        anticoncentration(cfg.d, L, rate, cfg.k, reps, derive_seed(cfg.seed, static_cast<std::uint64_t>(L), 0), 0, 1,
                          cfg.workers);
    sink.row({std::to_string(L), fmt(r.estimate), fmt(r.ci.lo), fmt(r.ci.hi), fmt(r.srw_estimate), fmt(r.srw_ci.lo),
              fmt(r.srw_ci.hi), std::to_string(r.reps), std::to_string(cfg.k), fmt(rate)});
  }
}

void cmd_regions(const ExperimentConfig& cfg) {
  const Model model = load_model(cfg);
  const Torus torus = model_torus(model, cfg, single_L(cfg, 64));
  const double T = cfg.T > 0.0 ? cfg.T : 2.0;
  const std::vector<double> times = resolve_times(cfg, parse_times("0:" + fmt(T) + ":0.1"));
  if (times.back() > T + 1e-12) fail(ErrorCode::InvalidArgument, "times exceed --T");
  const MarkStream ms = generate_marks(torus, model.dec, Construction::GC2, T, derive_seed(cfg.seed, kRegionsStream, 0));
  const AuxRandomness aux(derive_seed(cfg.seed, kRegionsStream, 1));
  CsvSink sink(cfg);
  sink.row({"t", "red", "blue", "green"});
  for (const RegionSnapshot& r : regions(torus, ms, aux, model.dec, times))
    sink.row({fmt(r.t), std::to_string(r.red), std::to_string(r.blue), std::to_string(r.green)});
}

}  // namespace gex::cli
