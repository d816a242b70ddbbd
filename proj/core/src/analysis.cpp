#include "gex/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "gex/error.hpp"
#include "gex/hydrodynamics.hpp"
#include "gex/lanes.hpp"
#include "gex/parallel.hpp"
#include "gex/rng.hpp"

namespace gex {

namespace {

constexpr std::uint64_t kMixingStream = 0x6d69786e67ULL;       // "mixng"
constexpr std::uint64_t kCorrelationStream = 0x636f7272ULL;    // "corr"
constexpr std::uint64_t kReplacementStream = 0x7265706cULL;    // "repl"
constexpr std::uint64_t kBootstrapStream = 0x626f6f74ULL;      // "boot"
constexpr std::uint64_t kAnticoncStream = 0x616e746963ULL;     // "antic"
constexpr std::uint64_t kDominanceStream = 0x646f6d696eULL;    // "domin"
constexpr std::uint64_t kWalkStream = 0x77616c6bULL;           // "walk"

constexpr int kLanes = LaneEngine::kLanes;

long batches_for(long reps) { return (std::max(reps, 1L) + kLanes - 1) / kLanes; }

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Standard error of the grand mean from per-batch means of equal size.
double batch_se(const std::vector<double>& means) {
  const auto B = static_cast<double>(means.size());
  if (means.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / B;
  double ss = 0.0;
  for (double m : means) ss += (m - mu) * (m - mu);
  return std::sqrt(ss / (B - 1.0) / B);
}

double rho_plus_at(const Model& model, double t) {
  const ReactionPolynomial R = reaction_polynomial(model.rates);
  if (t <= 0.0) return 1.0;
  // Keep h * max|R'| within the solver's stability guard.
  const double h = std::min(1e-3, 0.25 / std::max(1.0, R.derivative_bound()));
  return solve_ode(R, 1.0, t, h).rho.back();
}

void check_lane_model(const Model& model, const Torus& torus) {
  if (model.dec.shape().d != torus.d()) fail(ErrorCode::InvalidArgument, "model dimension differs from torus");
  torus.require_model_radius(model.dec.shape().m);
}

// First time the sequence drops to <= eps, interpolated; NaN if never.
double first_crossing(const std::vector<double>& times, const std::vector<double>& v, double eps) {
  for (std::size_t g = 0; g < v.size(); ++g) {
    if (v[g] > eps) continue;
    if (g == 0) return times[0];
    const double a = v[g - 1], b = v[g];
    const double w = (a == b) ? 1.0 : (a - eps) / (a - b);
    return times[g - 1] + w * (times[g] - times[g - 1]);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int ring_dist(int v, int L) {
  v = ((v % L) + L) % L;
  return std::min(v, L - v);
}

int wrap(int v, int L) { return ((v % L) + L) % L; }

}  // namespace

Interval wilson_interval(long successes, long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const auto nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The interval always contains p; pin the degenerate ends exactly.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

double tv_exact_small(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::SupportMismatch, "laws live on state spaces of different size");
  if (a.size() > (1u << 16)) fail(ErrorCode::SetTooLarge, "exact total variation is limited to 2^16 states");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return 0.5 * s;
}

double threshold_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::SupportMismatch, "histograms have different supports");
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  if (na <= 0.0 || nb <= 0.0) fail(ErrorCode::InvalidArgument, "empty histogram");
  double ta = 0.0, tb = 0.0, best = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) {
    ta += a[k];
    tb += b[k];
    best = std::max(best, std::fabs(ta / na - tb / nb));
  }
  return best;
}

MixingProfile mixing_profile(const Model& model, const Torus& torus, const std::vector<double>& times, long reps,
                             std::uint64_t seed, const MixingOptions& opt) {
  check_lane_model(model, torus);
  if (times.empty()) fail(ErrorCode::InvalidArgument, "empty time grid");
  for (std::size_t g = 0; g < times.size(); ++g) {
    if (times[g] < 0.0 || (g > 0 && times[g] <= times[g - 1]))
      fail(ErrorCode::InvalidArgument, "time grid must be nonnegative and increasing");
  }
  MixingProfile out;
  out.times = times;
  out.seed = seed;
  const RegimeReport regime = classify_regime(reaction_polynomial(model.rates));
  if (regime.regime != Regime::High) {
    out.warning = std::string("regime is ") + to_string(regime.regime) +
                  "; the profile is not expected to show a logarithmic cutoff";
  }
  if (std::isnan(opt.t_star)) {
    if (regime.regime != Regime::High || !(std::fabs(regime.slope) > 0.0))
      fail(ErrorCode::InvalidArgument, "default proxy time needs a High regime; pass t_star explicitly");
    out.t_star = 4.0 * std::log(static_cast<double>(torus.N())) / (2.0 * std::fabs(regime.slope));
  } else {
    if (!(opt.t_star > 0.0)) fail(ErrorCode::InvalidArgument, "t_star must be positive");
    out.t_star = opt.t_star;
  }

  const long B = batches_for(reps);
  out.reps = B * kLanes;
  const std::size_t G = times.size();
  // Per batch: disagreement count per grid time and plus counts per lane at
  // every grid time, then at t_star (slot G).
  std::vector<std::vector<int>> uncoalesced(static_cast<std::size_t>(B), std::vector<int>(G + 1));
  std::vector<std::vector<int>> counts(static_cast<std::size_t>(B), std::vector<int>((G + 1) * kLanes));

  std::vector<std::pair<double, std::size_t>> schedule;
  for (std::size_t g = 0; g < G; ++g) schedule.emplace_back(times[g], g);
  schedule.emplace_back(out.t_star, G);
  std::stable_sort(schedule.begin(), schedule.end());

  parallel_for(static_cast<std::size_t>(B), opt.workers, [&](std::size_t b) {
    LaneEngine eng(torus, model.dec, derive_seed(seed, kMixingStream, b));
    for (const auto& [time, slot] : schedule) {
      eng.advance_to(time);
      uncoalesced[b][slot] = std::popcount(eng.disagreeing_lanes());
      const auto pc = eng.plus_counts();
      std::copy(pc.begin(), pc.end(), counts[b].begin() + static_cast<std::ptrdiff_t>(slot * kLanes));
    }
  });

  const std::size_t bins = static_cast<std::size_t>(torus.N()) + 1;
  auto histogram = [&](const std::vector<long>& which, std::size_t slot) {
    std::vector<double> h(bins, 0.0);
    for (long b : which) {
      const int* c = &counts[static_cast<std::size_t>(b)][slot * kLanes];
      for (int l = 0; l < kLanes; ++l) h[static_cast<std::size_t>(c[l])] += 1.0;
    }
    return h;
  };
  std::vector<long> all(static_cast<std::size_t>(B));
  std::iota(all.begin(), all.end(), 0L);
  const std::vector<double> proxy = histogram(all, G);

  long star_bad = 0;
  for (long b = 0; b < B; ++b) star_bad += uncoalesced[static_cast<std::size_t>(b)][G];
  out.proxy_uncoalesced = static_cast<double>(star_bad) / static_cast<double>(out.reps);

  for (std::size_t g = 0; g < G; ++g) {
    long bad = 0;
    for (long b = 0; b < B; ++b) bad += uncoalesced[static_cast<std::size_t>(b)][g];
    out.d_up.push_back(static_cast<double>(bad) / static_cast<double>(out.reps));
    const Interval w = wilson_interval(bad, out.reps);
    out.d_up_lo.push_back(w.lo);
    out.d_up_hi.push_back(w.hi);
    out.d_low.push_back(threshold_distance(histogram(all, g), proxy));
  }

  out.d_low_lo = out.d_low;
  out.d_low_hi = out.d_low;
  if (opt.bootstrap > 0 && B > 1) {
    Rng rng(derive_seed(seed, kBootstrapStream, 0));
    std::vector<std::vector<double>> draws(G);
    std::vector<long> pick(static_cast<std::size_t>(B));
    for (int r = 0; r < opt.bootstrap; ++r) {
      for (auto& p : pick) p = static_cast<long>(rng.below(static_cast<std::uint64_t>(B)));
      const std::vector<double> ref = histogram(pick, G);
      for (std::size_t g = 0; g < G; ++g) draws[g].push_back(threshold_distance(histogram(pick, g), ref));
    }
    for (std::size_t g = 0; g < G; ++g) {
      out.d_low_lo[g] = percentile(draws[g], 0.025);
      out.d_low_hi[g] = percentile(draws[g], 0.975);
    }
  }
  return out;
}

MixingTimeEstimate estimate_mixing_time(const MixingProfile& p, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) fail(ErrorCode::ParameterOutOfRange, "eps must lie in (0,1)");
  if (p.times.empty()) fail(ErrorCode::InvalidArgument, "empty profile");
  MixingTimeEstimate est;
  est.point = first_crossing(p.times, p.d_up, eps);
  est.upper = first_crossing(p.times, p.d_up_hi, eps);
  est.has_upper = !std::isnan(est.upper);

  std::ptrdiff_t last = -1;
  for (std::size_t g = 0; g < p.d_low.size(); ++g)
    if (p.d_low[g] > eps) last = static_cast<std::ptrdiff_t>(g);
  if (last >= 0) {
    const auto g = static_cast<std::size_t>(last);
    est.has_lower = true;
    if (g + 1 == p.times.size()) {
      est.lower = p.times[g];
    } else {
      const double a = p.d_low[g], b = p.d_low[g + 1];
      est.lower = p.times[g] + (a - eps) / (a - b) * (p.times[g + 1] - p.times[g]);
    }
  }
  est.bracketed = est.has_lower && est.has_upper;
  return est;
}

CorrelationReport correlation_report(const Model& model, const Torus& torus, double t, long reps, std::uint64_t seed,
                                     const std::vector<int>& sites, int workers) {
  check_lane_model(model, torus);
  if (reps < 1000) fail(ErrorCode::ParameterOutOfRange, "correlation estimates need at least 1000 replicas");
  if (t < 0.0) fail(ErrorCode::InvalidArgument, "negative time");
  for (int s : sites)
    if (s < 0 || s >= torus.N()) fail(ErrorCode::InvalidArgument, "site outside the torus");

  const long B = batches_for(reps);
  const std::size_t K = sites.size();
  const double N = torus.N();
  struct Batch {
    double mean = 0.0;  // per-lane spin mean, averaged over lanes
    double pair = 0.0;
    std::vector<double> site;     // sum over lanes of X(s_i), / kLanes
    std::vector<double> product;  // K*K, sum over lanes of X(s_i) X(s_j), / kLanes
  };
  std::vector<Batch> batches(static_cast<std::size_t>(B));

  parallel_for(static_cast<std::size_t>(B), workers, [&](std::size_t b) {
    LaneEngine eng(torus, model.dec, derive_seed(seed, kCorrelationStream, b));
    eng.advance_to(t);
    Batch& out = batches[b];
    const auto pc = eng.plus_counts();
    for (int c : pc) out.mean += (2.0 * c - N) / N;
    out.mean /= kLanes;
    for (int axis = 0; axis < torus.d(); ++axis) {
      const auto ag = eng.adjacent_agreements(axis);
      for (int a : ag) out.pair += (2.0 * a - N) / N;
    }
    out.pair /= static_cast<double>(kLanes) * torus.d();
    const auto& st = eng.state();
    out.site.resize(K);
    out.product.resize(K * K);
    for (std::size_t i = 0; i < K; ++i) {
      const std::uint64_t pi = st[static_cast<std::size_t>(sites[i])].p;
      out.site[i] = (2.0 * std::popcount(pi) - kLanes) / kLanes;
      for (std::size_t j = 0; j < K; ++j) {
        const std::uint64_t pj = st[static_cast<std::size_t>(sites[j])].p;
        out.product[i * K + j] = (2.0 * std::popcount(~(pi ^ pj)) - kLanes) / kLanes;
      }
    }
  });

  CorrelationReport rep;
  rep.t = t;
  rep.rho = rho_plus_at(model, t);
  rep.reps = B * kLanes;
  rep.sites = sites;
  const auto Bd = static_cast<double>(B);
  std::vector<double> means, pairs;
  for (const Batch& b : batches) {
    means.push_back(b.mean);
    pairs.push_back(b.pair);
  }
  const double sum_mean = std::accumulate(means.begin(), means.end(), 0.0);
  const double sum_pair = std::accumulate(pairs.begin(), pairs.end(), 0.0);
  rep.mean = sum_mean / Bd;
  rep.mean_se = batch_se(means);
  rep.deviation = rep.mean - rep.rho;
  rep.pair_mean = sum_pair / Bd;
  rep.covariance = rep.pair_mean - rep.mean * rep.mean;
  // Delete-one-batch jackknife for the covariance.
  std::vector<double> jack;
  for (long b = 0; b < B; ++b) {
    const double m = (sum_mean - means[static_cast<std::size_t>(b)]) / (Bd - 1.0);
    const double p = (sum_pair - pairs[static_cast<std::size_t>(b)]) / (Bd - 1.0);
    jack.push_back(p - m * m);
  }
  const double jmean = std::accumulate(jack.begin(), jack.end(), 0.0) / Bd;
  double jss = 0.0;
  for (double j : jack) jss += (j - jmean) * (j - jmean);
  rep.covariance_se = std::sqrt((Bd - 1.0) / Bd * jss);

  rep.site_mean.assign(K, 0.0);
  rep.site_se.assign(K, 0.0);
  rep.site_cov.assign(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<double> v;
    for (const Batch& b : batches) v.push_back(b.site[i]);
    rep.site_mean[i] = std::accumulate(v.begin(), v.end(), 0.0) / Bd;
    rep.site_se[i] = batch_se(v);
  }
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      double s = 0.0;
      for (const Batch& b : batches) s += b.product[i * K + j];
      rep.site_cov[i][j] = s / Bd - rep.site_mean[i] * rep.site_mean[j];
    }
  }
  return rep;
}

ReplacementResult replacement_check(const Model& model, const Torus& torus, const std::vector<int>& E, double t,
                                    long reps, std::uint64_t seed, bool pool_translates, int workers, int bootstrap) {
  check_lane_model(model, torus);
  if (E.size() > 8) fail(ErrorCode::SetTooLarge, "replacement check supports |E| <= 8");
  for (int s : E)
    if (s < 0 || s >= torus.N()) fail(ErrorCode::InvalidArgument, "site outside the torus");
  if (t < 0.0) fail(ErrorCode::InvalidArgument, "negative time");

  const std::size_t states = std::size_t{1} << E.size();
  const long B = batches_for(reps);
  const int translates = pool_translates ? torus.N() : 1;
  std::vector<std::vector<double>> hist(static_cast<std::size_t>(B), std::vector<double>(states, 0.0));

  parallel_for(static_cast<std::size_t>(B), workers, [&](std::size_t b) {
    LaneEngine eng(torus, model.dec, derive_seed(seed, kReplacementStream, b));
    eng.advance_to(t);
    const auto& st = eng.state();
    std::vector<std::uint64_t> words(E.size());
    for (int v = 0; v < translates; ++v) {
      const Site sv = torus.site(v);
      for (std::size_t k = 0; k < E.size(); ++k)
        words[k] = st[static_cast<std::size_t>(torus.translate(E[k], Offset{sv.x, sv.y}))].p;
      for (int l = 0; l < kLanes; ++l) {
        std::size_t code = 0;
        for (std::size_t k = 0; k < E.size(); ++k) code |= static_cast<std::size_t>((words[k] >> l) & 1ULL) << k;
        hist[b][code] += 1.0;
      }
    }
  });

  ReplacementResult res;
  res.rho = rho_plus_at(model, t);
  res.samples = B * kLanes * translates;
  auto law_of = [&](const std::vector<long>& which) {
    std::vector<double> law(states, 0.0);
    double total = 0.0;
    for (long b : which)
      for (std::size_t c = 0; c < states; ++c) {
        law[c] += hist[static_cast<std::size_t>(b)][c];
        total += hist[static_cast<std::size_t>(b)][c];
      }
    for (double& x : law) x /= total;
    return law;
  };
  res.product.assign(states, 1.0);
  for (std::size_t c = 0; c < states; ++c)
    for (std::size_t k = 0; k < E.size(); ++k)
      res.product[c] *= ((c >> k) & 1U) ? 0.5 * (1.0 + res.rho) : 0.5 * (1.0 - res.rho);
  std::vector<long> all(static_cast<std::size_t>(B));
  std::iota(all.begin(), all.end(), 0L);
  res.empirical = law_of(all);
  res.tv = tv_exact_small(res.empirical, res.product);
  res.ci = {res.tv, res.tv};
  if (bootstrap > 0 && B > 1) {
    Rng rng(derive_seed(seed, kBootstrapStream, 1));
    std::vector<double> draws;
    std::vector<long> pick(static_cast<std::size_t>(B));
    for (int r = 0; r < bootstrap; ++r) {
      for (auto& p : pick) p = static_cast<long>(rng.below(static_cast<std::uint64_t>(B)));
      draws.push_back(tv_exact_small(law_of(pick), res.product));
    }
    res.ci = {percentile(draws, 0.025), percentile(draws, 0.975)};
  }
  return res;
}

PerturbationCheck perturbation_bound_check(int n, double rho, const std::vector<SubsetPerturbation>& mixture) {
  if (n < 1 || n > 16) fail(ErrorCode::SetTooLarge, "perturbation check supports 1 <= n <= 16");
  if (!(std::fabs(rho) < 1.0)) fail(ErrorCode::RhoDegenerate, "product law must have |rho| < 1");
  if (mixture.empty()) fail(ErrorCode::InvalidArgument, "empty mixture");
  const std::uint32_t full = (n == 32) ? ~0U : ((1U << n) - 1U);
  double psum = 0.0;
  for (const auto& s : mixture) {
    if ((s.subset & ~full) != 0) fail(ErrorCode::InvalidArgument, "subset outside [n]");
    if (s.law.size() != (std::size_t{1} << std::popcount(s.subset)))
      fail(ErrorCode::SupportMismatch, "subset law has the wrong number of states");
    if (s.probability < 0.0) fail(ErrorCode::InvalidArgument, "negative mixture weight");
    psum += s.probability;
  }
  if (std::fabs(psum - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "mixture weights must sum to 1");

  const double pp = 0.5 * (1.0 + rho), pm = 0.5 * (1.0 - rho);
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> nu(states, 1.0), mu(states, 0.0);
  for (std::size_t x = 0; x < states; ++x)
    for (int k = 0; k < n; ++k) nu[x] *= ((x >> k) & 1U) ? pp : pm;
  for (const auto& s : mixture) {
    for (std::size_t x = 0; x < states; ++x) {
      // Density of phi_S(x_S) times the product law off S.
      std::size_t sub = 0;
      int j = 0;
      double off = 1.0;
      for (int k = 0; k < n; ++k) {
        const bool plus = (x >> k) & 1U;
        if ((s.subset >> k) & 1U) {
          sub |= static_cast<std::size_t>(plus) << j;
          ++j;
        } else {
          off *= plus ? pp : pm;
        }
      }
      mu[x] += s.probability * s.law[sub] * off;
    }
  }
  PerturbationCheck out;
  const double tv = tv_exact_small(mu, nu);
  out.lhs = 4.0 * tv * tv;
  for (std::size_t x = 0; x < states; ++x) out.chi2 += (mu[x] - nu[x]) * (mu[x] - nu[x]) / nu[x];
  const double theta = std::max(2.0 / (1.0 + rho), 2.0 / (1.0 - rho));
  for (const auto& a : mixture)
    for (const auto& b : mixture)
      out.rhs += a.probability * b.probability * std::pow(theta, std::popcount(a.subset & b.subset));
  out.rhs -= 1.0;
  const double slack = 1e-12;
  out.holds = out.lhs <= out.chi2 + slack && out.chi2 <= out.rhs + slack;
  return out;
}

namespace {

struct RelativeWalk {
  int d;
  int L;
  int y[2];

  int dist() const {
    int s = 0;
    for (int i = 0; i < d; ++i) s += ring_dist(y[i], L);
    return s;
  }
  // n uniformized steps of the free relative walk, each to one of 2d neighbors.
  void free_steps(std::uint64_t n, Rng& rng) {
    if (n == 0) return;
    std::uint64_t along[2] = {n, 0};
    if (d == 2) {
      along[0] = rng.binomial(n, 0.5);
      along[1] = n - along[0];
    }
    for (int i = 0; i < d; ++i) {
      const auto up = static_cast<long long>(rng.binomial(along[i], 0.5));
      const long long disp = 2 * up - static_cast<long long>(along[i]);
      y[i] = wrap(static_cast<int>((static_cast<long long>(y[i]) + disp) % L), L);
    }
  }
};

// One uniformized step (rate 4dL^2) of the IP(2) relative coordinate: a
// proposal into 0 becomes the swap y -> -y with probability 1/2.
void ip2_step(RelativeWalk& w, Rng& rng) {
  const auto dir = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * w.d)));
  const int axis = dir / 2;
  const int delta = (dir % 2 == 0) ? 1 : -1;
  int next[2] = {w.y[0], w.y[1]};
  next[axis] = wrap(next[axis] + delta, w.L);
  const bool zero = next[0] == 0 && (w.d == 1 || next[1] == 0);
  if (!zero) {
    w.y[0] = next[0];
    w.y[1] = next[1];
  } else if (rng.bernoulli(0.5)) {
    for (int i = 0; i < w.d; ++i) w.y[i] = wrap(-w.y[i], w.L);
  }
}

}  // namespace

AnticoncentrationResult anticoncentration(int d, int L, double theta, int k, long reps, std::uint64_t seed,
                                          int start1, int start2, int workers) {
  if (d != 1 && d != 2) fail(ErrorCode::DimensionUnsupported, "dimension must be 1 or 2");
  if (L < 2) fail(ErrorCode::InvalidArgument, "side length must be at least 2");
  if (!(theta > 0.0)) fail(ErrorCode::ParameterOutOfRange, "theta must be positive");
  if (reps < 1) fail(ErrorCode::InvalidArgument, "reps must be positive");
  const Torus torus(d, L);
  if (start1 < 0 || start1 >= torus.N() || start2 < 0 || start2 >= torus.N())
    fail(ErrorCode::InvalidArgument, "start outside the torus");
  if (start1 == start2) fail(ErrorCode::CoincidentStart, "walkers must start at distinct sites");
  const Site a = torus.site(start1), b = torus.site(start2);
  const int y0[2] = {wrap(a.x - b.x, L), wrap(a.y - b.y, L)};
  const double rate = 4.0 * d * static_cast<double>(L) * L;

  const std::size_t chunk = 1000;
  const std::size_t chunks = (static_cast<std::size_t>(reps) + chunk - 1) / chunk;
  std::vector<long> hit_ip(chunks, 0), hit_srw(chunks, 0);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(static_cast<std::size_t>(reps), (c + 1) * chunk);
    for (std::size_t r = c * chunk; r < end; ++r) {
      Rng rng(derive_seed(seed, kAnticoncStream, r));
      const double zeta = rng.exponential(theta);
      std::uint64_t steps = rng.poisson(rate * zeta);
      RelativeWalk ip{d, L, {y0[0], y0[1]}};
      RelativeWalk srw = ip;
      srw.free_steps(steps, rng);
      while (steps > 0) {
        // From distance r >= 2 the next r - 1 steps cannot propose 0.
        const int r_now = ip.dist();
        if (r_now >= 2) {
          const std::uint64_t n = std::min<std::uint64_t>(static_cast<std::uint64_t>(r_now - 1), steps);
          ip.free_steps(n, rng);
          steps -= n;
        } else {
          ip2_step(ip, rng);
          --steps;
        }
      }
      if (ip.dist() <= k) ++hit_ip[c];
      if (srw.dist() <= k) ++hit_srw[c];
    }
  });
  AnticoncentrationResult out;
  out.reps = reps;
  const long hi = std::accumulate(hit_ip.begin(), hit_ip.end(), 0L);
  const long hs = std::accumulate(hit_srw.begin(), hit_srw.end(), 0L);
  out.estimate = static_cast<double>(hi) / static_cast<double>(reps);
  out.ci = wilson_interval(hi, reps);
  out.srw_estimate = static_cast<double>(hs) / static_cast<double>(reps);
  out.srw_ci = wilson_interval(hs, reps);
  return out;
}

DominanceResult ip2_dominance_check(int d, int L, const std::array<int, 4>& starts, double T, long reps,
                                    std::uint64_t seed) {
  if (d != 1 && d != 2) fail(ErrorCode::DimensionUnsupported, "dimension must be 1 or 2");
  if (L < 3) fail(ErrorCode::InvalidArgument, "side length must be at least 3");
  if (T < 0.0 || reps < 1) fail(ErrorCode::InvalidArgument, "need T >= 0 and reps >= 1");
  const Torus torus(d, L);
  for (int s : starts)
    if (s < 0 || s >= torus.N()) fail(ErrorCode::InvalidArgument, "start outside the torus");
  if (starts[0] == starts[1]) fail(ErrorCode::CoincidentStart, "IP(2) walkers must start at distinct sites");

  auto rel = [&](int u1, int u2) {
    const Site a = torus.site(u1), b = torus.site(u2);
    return std::array<int, 2>{wrap(b.x - a.x, L), wrap(b.y - a.y, L)};
  };
  const std::array<int, 2> y0 = rel(starts[0], starts[1]);
  const std::array<int, 2> w0 = rel(starts[2], starts[3]);
  // Coordinate matching sigma with dist(w_sigma(i)) <= dist(y_i) for all i.
  std::array<int, 2> sigma{0, 1};
  auto matched = [&](const std::array<int, 2>& s) {
    for (int i = 0; i < d; ++i)
      if (ring_dist(w0[static_cast<std::size_t>(s[static_cast<std::size_t>(i)])], L) >
          ring_dist(y0[static_cast<std::size_t>(i)], L))
        return false;
    return true;
  };
  if (!matched(sigma)) {
    sigma = {1, 0};
    if (d == 1 || !matched(sigma))
      fail(ErrorCode::PreconditionViolated, "independent pair is not dominated coordinatewise by the IP(2) pair");
  }

  struct Move {
    std::array<int, 2> y;
    std::array<int, 2> w;
    double rate;  // in units of L^2
  };
  auto total_dist = [&](const std::array<int, 2>& v) {
    int s = 0;
    for (int i = 0; i < d; ++i) s += ring_dist(v[static_cast<std::size_t>(i)], L);
    return s;
  };
  auto is_zero = [&](const std::array<int, 2>& v) { return v[0] == 0 && (d == 1 || v[1] == 0); };

  DominanceResult res;
  res.paths = reps;
  const double L2 = static_cast<double>(L) * L;
  std::vector<Move> moves;
  for (long r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, kDominanceStream, static_cast<std::uint64_t>(r)));
    std::array<int, 2> y = y0, w = w0;
    double now = 0.0;
    while (true) {
      moves.clear();
      for (int i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const auto j = static_cast<std::size_t>(sigma[ii]);
        const int a = ring_dist(y[ii], L), b = ring_dist(w[j], L);
        for (int s : {1, -1}) {
          std::array<int, 2> ny = y;
          ny[ii] = wrap(y[ii] + s, L);
          const bool blocked = is_zero(ny);
          if (b < a) {
            if (!blocked) moves.push_back({ny, w, 2.0});
            std::array<int, 2> nw = w;
            nw[j] = wrap(w[j] + s, L);
            moves.push_back({y, nw, 2.0});
          } else {
            // Equal distances: w_j = +-y_i; mirror y's step so distances stay equal.
            const int xi = (w[j] == y[ii]) ? 1 : -1;
            std::array<int, 2> nw = w;
            nw[j] = wrap(w[j] + xi * s, L);
            moves.push_back({blocked ? y : ny, nw, 2.0});
          }
        }
        if (a == 1 && total_dist(y) == 1) {
          std::array<int, 2> ny = y;
          ny[ii] = wrap(-y[ii], L);
          moves.push_back({ny, w, 1.0});
        }
      }
      double total = 0.0;
      for (const Move& m : moves) total += m.rate;
      now += rng.exponential(total * L2);
      if (now > T) break;
      double u = rng.uniform() * total;
      std::size_t pick = 0;
      while (pick + 1 < moves.size() && u >= moves[pick].rate) {
        u -= moves[pick].rate;
        ++pick;
      }
      y = moves[pick].y;
      w = moves[pick].w;
      ++res.jumps;
      if (total_dist(w) > total_dist(y)) ++res.violations;
    }
  }
  return res;
}

double walker_return_probability(int L, double t) {
  if (L < 1 || t < 0.0) fail(ErrorCode::InvalidArgument, "need L >= 1 and t >= 0");
  const double L2 = static_cast<double>(L) * L;
  double s = 0.0;
  for (int k = 0; k < L; ++k)
    s += std::exp(-2.0 * L2 * t * (1.0 - std::cos(2.0 * std::numbers::pi * k / L)));
  return s / L;
}

Proportion walker_return_mc(int L, double t, long reps, std::uint64_t seed) {
  if (L < 1 || t < 0.0 || reps < 1) fail(ErrorCode::InvalidArgument, "need L >= 1, t >= 0 and reps >= 1");
  Rng rng(derive_seed(seed, kWalkStream, 0));
  const double mean = 2.0 * static_cast<double>(L) * L * t;
  long hits = 0;
  for (long r = 0; r < reps; ++r) {
    const std::uint64_t n = rng.poisson(mean);
    const auto up = static_cast<long long>(rng.binomial(n, 0.5));
    const long long disp = 2 * up - static_cast<long long>(n);
    if (disp % L == 0) ++hits;
  }
  Proportion p;
  p.n = reps;
  p.estimate = static_cast<double>(hits) / static_cast<double>(reps);
  p.ci = wilson_interval(hits, reps);
  return p;
}

}  // namespace gex
