#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gex/flip_model.hpp"
#include "gex/lattice.hpp"

namespace gex {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// 95% Wilson score interval by default.
Interval wilson_interval(long successes, long n, double z = 1.959963984540054);

// Half the l1 distance between two explicit laws on the same state space
// (at most 2^16 states). Throws SupportMismatch on different sizes.
double tv_exact_small(const std::vector<double>& a, const std::vector<double>& b);

// Kolmogorov distance between two histograms over the same ordered support:
// the largest discrepancy over threshold events {value >= k}, a lower bound
// on their total variation distance.
double threshold_distance(const std::vector<double>& a, const std::vector<double>& b);

struct MixingOptions {
  // Time at which all-plus lanes sample the stationary proxy. NaN selects
  // 4 log N / (2 |R'(rho*)|), available in the High regime only.
  double t_star = std::numeric_limits<double>::quiet_NaN();
  int workers = 1;
  int bootstrap = 1000;  // resamples for the d_low interval; 0 disables
};

struct MixingProfile {
  std::vector<double> times;
  std::vector<double> d_up;     // P(X+_t != X-_t)
  std::vector<double> d_up_lo;  // Wilson band
  std::vector<double> d_up_hi;
  std::vector<double> d_low;    // magnetization threshold distance to the proxy
  std::vector<double> d_low_lo; // bootstrap percentile band over lane batches
  std::vector<double> d_low_hi;
  long reps = 0;
  std::uint64_t seed = 0;
  double t_star = 0.0;
  // Fraction of lanes with X+ != X- at t_star; bounds the proxy's distance to
  // the stationary law.
  double proxy_uncoalesced = 0.0;
  std::string warning;
};

// Forward lanes from the grand coupling of all-plus and all-minus (GC2).
// reps is rounded up to a multiple of 64.
MixingProfile mixing_profile(const Model& model, const Torus& torus, const std::vector<double>& times, long reps,
                             std::uint64_t seed, const MixingOptions& opt = {});

struct MixingTimeEstimate {
  double point = std::numeric_limits<double>::quiet_NaN();  // d_up crossing
  double lower = std::numeric_limits<double>::quiet_NaN();  // d_low crossing
  double upper = std::numeric_limits<double>::quiet_NaN();  // crossing of the Wilson upper band of d_up
  bool has_lower = false;
  bool has_upper = false;
  bool bracketed = false;  // both edges available
};

// Crossings use linear interpolation between consecutive grid times. The
// upper edge is the first time the Wilson upper band of d_up is <= eps; the
// lower edge follows the last grid time with d_low > eps.
MixingTimeEstimate estimate_mixing_time(const MixingProfile& profile, double eps);

struct CorrelationReport {
  double t = 0.0;
  double rho = 0.0;  // rho_+(t) from the ODE
  long reps = 0;
  // Pooled over sites by translation invariance.
  double mean = 0.0;
  double mean_se = 0.0;
  double deviation = 0.0;     // mean - rho
  double pair_mean = 0.0;     // E X(u) X(u + e), pooled over u and axes
  double covariance = 0.0;    // pair_mean - mean^2
  double covariance_se = 0.0; // delete-one-batch jackknife
  // Requested sites.
  std::vector<int> sites;
  std::vector<double> site_mean;
  std::vector<double> site_se;
  std::vector<std::vector<double>> site_cov;
};

// X_t from all plus; requires reps >= 1000 (rounded up to a multiple of 64).
CorrelationReport correlation_report(const Model& model, const Torus& torus, double t, long reps, std::uint64_t seed,
                                     const std::vector<int>& sites = {}, int workers = 1);

struct ReplacementResult {
  double tv = 0.0;
  Interval ci;
  double rho = 0.0;
  std::vector<double> empirical;  // law of X_t(E), code bit k set iff site k is +1
  std::vector<double> product;    // Rademacher(rho)^{|E|}
  long samples = 0;
};

// Law of X_t(E) from all plus against Rademacher(rho_+(t))^{|E|}. With
// pool_translates every translate of E in every lane contributes a sample.
ReplacementResult replacement_check(const Model& model, const Torus& torus, const std::vector<int>& E, double t,
                                    long reps, std::uint64_t seed, bool pool_translates = true, int workers = 1,
                                    int bootstrap = 1000);

struct SubsetPerturbation {
  std::uint32_t subset = 0;   // bitmask over [n]
  double probability = 0.0;
  // Law on {-1,1}^subset, indexed by codes over the subset's coordinates in
  // increasing order (bit set = +1).
  std::vector<double> law;
};

struct PerturbationCheck {
  double lhs = 0.0;   // 4 TV(mu, nu)^2
  double chi2 = 0.0;  // ||mu/nu - 1||^2 in L^2(nu)
  double rhs = 0.0;   // E[theta^{|S cap S'|}] - 1
  bool holds = false;
};

PerturbationCheck perturbation_bound_check(int n, double rho, const std::vector<SubsetPerturbation>& mixture);

struct AnticoncentrationResult {
  double estimate = 0.0;  // two walkers of an IP(2)
  Interval ci;
  double srw_estimate = 0.0;  // two independent walks from the same starts
  Interval srw_ci;
  long reps = 0;
};

// P(dist(U1(zeta), U2(zeta)) <= k), zeta ~ Exp(theta), edge conductance L^2.
AnticoncentrationResult anticoncentration(int d, int L, double theta, int k, long reps, std::uint64_t seed,
                                          int start1 = 0, int start2 = 1, int workers = 1);

struct DominanceResult {
  long violations = 0;
  long jumps = 0;
  long paths = 0;
};

// Markovian coupling of the IP(2) relative position Y with the relative
// position of two independent walks, run to time T; counts jumps after which
// dist(independent pair) > dist(IP(2) pair). starts = (u1, u2, v1, v2) with
// (u1, u2) the IP(2) pair.
DominanceResult ip2_dominance_check(int d, int L, const std::array<int, 4>& starts, double T, long reps,
                                    std::uint64_t seed);

// P(U(t) = U(0)) for one walker on the cycle of length L with conductance L^2.
double walker_return_probability(int L, double t);

struct Proportion {
  double estimate = 0.0;
  Interval ci;
  long n = 0;
};

Proportion walker_return_mc(int L, double t, long reps, std::uint64_t seed);

}  // namespace gex
