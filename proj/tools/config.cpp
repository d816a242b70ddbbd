#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gex/error.hpp"

namespace gex::cli {

namespace {

bool is_builtin(const std::string& name) { return name == "demasi" || name == "theta" || name == "constant"; }

nlohmann::json read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open model file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, "model file " + path + ": " + e.what());
  }
}

Decomposition pick_decomposition(const std::string& kind, double gamma, const LocalRateTable& rates,
                                 const std::string& choice) {
  const bool demasi = kind == "demasi" && gamma < 1.0;
  if (choice == "explicit") {
    if (!demasi) fail(ErrorCode::InvalidArgument, "--decomposition explicit needs a De Masi model with gamma < 1");
    return demasi_explicit_decomposition(gamma);
  }
  if (choice == "greedy") return decompose(rates);
  return demasi ? demasi_explicit_decomposition(gamma) : decompose(rates);
}

}  // namespace

Model load_model(const ExperimentConfig& cfg) {
  if (is_builtin(cfg.model)) {
    LocalRateTable rates = cfg.model == "demasi" ? builtin_demasi(cfg.gamma)
                           : cfg.model == "theta" ? builtin_theta(cfg.theta)
                                                  : builtin_constant(1, cfg.d);
    Decomposition dec = pick_decomposition(cfg.model, cfg.gamma, rates, cfg.decomposition);
    return make_model(cfg.model, rates, std::move(dec));
  }
  const nlohmann::json j = read_model_file(cfg.model);
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const int d = j.value("d", 1), m = j.value("m", 1);
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    const double gamma = params.value("gamma", 5.0 / 12);
    std::optional<LocalRateTable> rates;
    if (kind == "demasi") {
      if (d != 1 || m != 1) fail(ErrorCode::InvalidArgument, "the De Masi model has d = 1, m = 1");
      rates = builtin_demasi(gamma);
    } else if (kind == "theta") {
      if (d != 1 || m != 1) fail(ErrorCode::InvalidArgument, "the theta model has d = 1, m = 1");
      rates = builtin_theta(params.value("theta", 1.0));
    } else if (kind == "constant") {
      rates = builtin_constant(m, d, params.value("value", 1.0));
    } else if (kind == "table") {
      rates = LocalRateTable(d, m, j.at("rates").get<std::vector<double>>());
    } else {
      fail(ErrorCode::InvalidArgument, "unknown model kind " + kind);
    }
    Decomposition dec = pick_decomposition(kind, gamma, *rates, cfg.decomposition);
    return make_model(j.value("name", kind), *rates, std::move(dec));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("model file: ") + e.what());
  }
}

std::vector<double> parse_times(const std::string& spec) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "bad time '" + s + "'");
    return v;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) fail(ErrorCode::InvalidArgument, "time range must be start:stop:step");
    const double a = number(parts[0]), b = number(parts[1]), h = number(parts[2]);
    if (!(h > 0.0) || b < a) fail(ErrorCode::InvalidArgument, "time range needs step > 0 and stop >= start");
    // Integer counter avoids accumulating the step.
    const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
  } else {
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty time grid");
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0 || (i > 0 && out[i] <= out[i - 1]))
      fail(ErrorCode::InvalidArgument, "times must be nonnegative and increasing");
  return out;
}

std::vector<double> resolve_times(const ExperimentConfig& cfg, const std::vector<double>& fallback) {
  return cfg.times.empty() ? fallback : parse_times(cfg.times);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.d != 1 && cfg.d != 2) fail(ErrorCode::DimensionUnsupported, "--d must be 1 or 2");
  if (cfg.model == "demasi" && !(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
    fail(ErrorCode::ParameterOutOfRange, "--gamma must lie in [0, 1]");
  if (cfg.model == "theta" && !(cfg.theta > 0.0)) fail(ErrorCode::ParameterOutOfRange, "--theta must be positive");
  if ((cfg.model == "demasi" || cfg.model == "theta") && cfg.d != 1)
    fail(ErrorCode::DimensionUnsupported, "builtin " + cfg.model + " is one-dimensional");
  if (cfg.decomposition != "auto" && cfg.decomposition != "greedy" && cfg.decomposition != "explicit")
    fail(ErrorCode::InvalidArgument, "--decomposition must be auto, greedy or explicit");
  if (cfg.T < 0.0 || !std::isfinite(cfg.T)) fail(ErrorCode::InvalidArgument, "--T must be nonnegative");
  if (cfg.reps < 0) fail(ErrorCode::InvalidArgument, "--reps must be positive");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) fail(ErrorCode::ParameterOutOfRange, "--eps must lie in (0, 1)");
  if (cfg.t_star < 0.0) fail(ErrorCode::InvalidArgument, "--t-star must be positive");
  if (cfg.k < 0) fail(ErrorCode::InvalidArgument, "--k must be nonnegative");
  if (cfg.zeta_rate < 0.0) fail(ErrorCode::InvalidArgument, "--zeta-rate must be positive");
  if (cfg.coupling_seeds < 1) fail(ErrorCode::InvalidArgument, "--coupling-seeds must be positive");
  if (cfg.workers < 1) fail(ErrorCode::InvalidArgument, "--workers must be positive");
  if (!cfg.times.empty()) parse_times(cfg.times);
  const int limit = cfg.d == 1 ? 512 : 64;
  for (int L : cfg.L) {
    if (L < 2) fail(ErrorCode::InvalidArgument, "--L must be at least 2");
    if (L > limit && !cfg.force_large)
      fail(ErrorCode::DeskScaleExceeded,
           "L = " + std::to_string(L) + " exceeds the desk-scale limit " + std::to_string(limit) +
               " for d = " + std::to_string(cfg.d) + "; pass --force-large to override");
  }
}

nlohmann::json canonical(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["command"] = cfg.command;
  if (is_builtin(cfg.model)) {
    j["model"] = cfg.model;
    if (cfg.model == "demasi") j["gamma"] = cfg.gamma;
    if (cfg.model == "theta") j["theta"] = cfg.theta;
  } else {
    j["model"] = read_model_file(cfg.model);
  }
  j["decomposition"] = cfg.decomposition;
  j["d"] = cfg.d;
  j["L"] = cfg.L;
  j["T"] = cfg.T;
  j["times"] = cfg.times;
  j["reps"] = cfg.reps;
  j["eps"] = cfg.eps;
  j["t_star"] = cfg.t_star;
  j["k"] = cfg.k;
  j["zeta_rate"] = cfg.zeta_rate;
  j["coupling_seeds"] = cfg.coupling_seeds;
  j["seed"] = cfg.seed;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gex::cli
