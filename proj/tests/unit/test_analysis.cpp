#include "doctest.h"

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "gex/analysis.hpp"
#include "gex/error.hpp"
#include "oracles.hpp"

using namespace gex;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

// Law of sum of spins over 4 sites from a row of the exact chain, indexed by
// number of plus sites.
std::vector<double> plus_count_law(const Eigen::VectorXd& row) {
  std::vector<double> out(5, 0.0);
  for (int x = 0; x < 16; ++x) out[static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(x)))] += row(x);
  return out;
}

double return_probability_sum(int L, double t) {
  double s = 0.0;
  for (int k = 0; k < L; ++k)
    s += std::exp(-2.0 * static_cast<double>(L) * L * t * (1.0 - std::cos(2.0 * std::numbers::pi * k / L)));
  return s / L;
}

}  // namespace

TEST_CASE("Wilson interval") {
  const Interval z = wilson_interval(0, 10);
  CHECK(z.lo == doctest::Approx(0.0));
  CHECK(z.hi == doctest::Approx(0.27753).epsilon(1e-4));
  const Interval h = wilson_interval(50, 100);
  CHECK(h.lo + h.hi == doctest::Approx(1.0));
  CHECK(h.lo < 0.5);
  CHECK(wilson_interval(10, 10).hi == doctest::Approx(1.0));
}

TEST_CASE("exact total variation and threshold distance") {
  CHECK(tv_exact_small({0.5, 0.5}, {1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(tv_exact_small({0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}) == 0.0);
  CHECK(code_of([] { tv_exact_small({1.0}, {0.5, 0.5}); }) == ErrorCode::SupportMismatch);
  CHECK(code_of([] { tv_exact_small(std::vector<double>(1 << 17, 0.0), std::vector<double>(1 << 17, 0.0)); }) ==
        ErrorCode::SetTooLarge);
  CHECK(threshold_distance({0.5, 0.0, 0.5}, {0.0, 1.0, 0.0}) == doctest::Approx(0.5));
  // Product Rademacher laws: TV of a single coordinate is |rho - rho'| / 2.
  const double r1 = 0.2, r2 = -0.1;
  CHECK(tv_exact_small({(1 - r1) / 2, (1 + r1) / 2}, {(1 - r2) / 2, (1 + r2) / 2}) ==
        doctest::Approx(std::fabs(r1 - r2) / 2));
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> a(6), b(6);
    double sa = 0, sb = 0;
    for (int i = 0; i < 6; ++i) {
      sa += a[static_cast<std::size_t>(i)] = rng.uniform();
      sb += b[static_cast<std::size_t>(i)] = rng.uniform();
    }
    for (int i = 0; i < 6; ++i) {
      a[static_cast<std::size_t>(i)] /= sa;
      b[static_cast<std::size_t>(i)] /= sb;
    }
    CHECK(threshold_distance(a, b) <= tv_exact_small(a, b) + 1e-12);
  }
}

TEST_CASE("mixing time crossings on synthetic profiles") {
  MixingProfile p;
  p.times = {0.0, 1.0, 2.0, 3.0};
  p.d_up = {1.0, 0.6, 0.2, 0.0};
  p.d_up_lo = p.d_up;
  p.d_up_hi = {1.0, 0.8, 0.3, 0.1};
  p.d_low = {1.0, 0.5, 0.1, 0.0};
  const MixingTimeEstimate e = estimate_mixing_time(p, 0.25);
  CHECK(e.point == doctest::Approx(1.0 + 0.35 / 0.4));
  CHECK(e.upper == doctest::Approx(2.0 + 0.05 / 0.2));
  CHECK(e.lower == doctest::Approx(1.0 + 0.25 / 0.4));
  CHECK(e.bracketed);
  CHECK(e.lower <= e.point);
  CHECK(e.point <= e.upper);

  p.d_up = p.d_up_hi = {0.0, 0.0, 0.0, 0.0};
  p.d_low = {0.0, 0.0, 0.0, 0.0};
  const MixingTimeEstimate zero = estimate_mixing_time(p, 0.25);
  CHECK(zero.point == 0.0);
  CHECK(zero.upper == 0.0);

  p.d_up = p.d_up_hi = {1.0, 1.0, 1.0, 1.0};
  p.d_low = {1.0, 1.0, 1.0, 1.0};
  const MixingTimeEstimate none = estimate_mixing_time(p, 0.25);
  CHECK_FALSE(none.has_upper);
  CHECK_FALSE(none.bracketed);
}

TEST_CASE("mixing profile for constant rates against the closed form") {
  const Model model = make_model("constant", builtin_constant(1, 1));
  const Torus t(1, 16);
  std::vector<double> times;
  for (int k = 0; k <= 16; ++k) times.push_back(0.25 * k);
  MixingOptions opt;
  opt.bootstrap = 200;
  const MixingProfile p = mixing_profile(model, t, times, 4096, 9, opt);
  CHECK(p.reps == 4096);
  CHECK(p.warning.empty());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double exact = 1.0 - std::pow(1.0 - std::exp(-2.0 * times[k]), 16);
    const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-4) / p.reps);
    CHECK_MESSAGE(std::fabs(p.d_up[k] - exact) <= 4.0 * se, "t = " << times[k]);
    CHECK(p.d_up_lo[k] <= p.d_up[k]);
    CHECK(p.d_up[k] <= p.d_up_hi[k]);
  }
  // Closed-form crossing of 1/4 lies inside the reported bracket.
  const double crossing = -0.5 * std::log(1.0 - std::pow(0.75, 1.0 / 16));
  const MixingTimeEstimate e = estimate_mixing_time(p, 0.25);
  REQUIRE(e.bracketed);
  CHECK(e.lower <= crossing + 0.1);
  CHECK(e.upper >= crossing - 0.1);
}

TEST_CASE("mixing profile bounds the exact chain at L = 4") {
  const LocalRateTable rates = builtin_demasi(5.0 / 12);
  const Model model = make_model("demasi", rates, demasi_explicit_decomposition(5.0 / 12));
  const Torus t(1, 4);
  const oracle::ExactChain chain = oracle::exact_chain(rates, 4);
  const Eigen::VectorXd pi = oracle::stationary_law(chain);
  const std::vector<double> times{0.25, 0.5, 1.0, 2.0};
  MixingOptions opt;
  opt.t_star = 12.0;
  opt.bootstrap = 0;
  const MixingProfile p = mixing_profile(model, t, times, 8192, 10, opt);
  CHECK(p.proxy_uncoalesced <= 0.01);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Eigen::MatrixXd P = oracle::transition_matrix(chain, times[k]);
    std::vector<double> plus(16), minus(16);
    for (int x = 0; x < 16; ++x) {
      plus[static_cast<std::size_t>(x)] = P(15, x);
      minus[static_cast<std::size_t>(x)] = P(0, x);
    }
    const double sep = tv_exact_small(plus, minus);
    const double sigma = std::sqrt(0.25 / p.reps);
    CHECK_MESSAGE(p.d_up[k] >= sep - 3.0 * sigma, "t = " << times[k]);
    const double ks = threshold_distance(plus_count_law(P.row(15).transpose()), plus_count_law(pi));
    CHECK_MESSAGE(std::fabs(p.d_low[k] - ks) <= 0.04, "t = " << times[k] << " d_low = " << p.d_low[k]);
  }
}

TEST_CASE("mixing profile guards") {
  const Torus t(1, 16);
  const Model low = make_model("demasi", builtin_demasi(7.0 / 12));
  CHECK_THROWS_AS(mixing_profile(low, t, {0.0, 1.0}, 64, 1), Error);
  MixingOptions opt;
  opt.t_star = 5.0;
  opt.bootstrap = 0;
  const MixingProfile p = mixing_profile(low, t, {0.0, 1.0}, 64, 1, opt);
  CHECK_FALSE(p.warning.empty());
  const Model high = make_model("constant", builtin_constant(1, 1));
  CHECK_THROWS_AS(mixing_profile(high, t, {1.0, 0.5}, 64, 1, opt), Error);
}

TEST_CASE("correlations vanish for constant rates") {
  const Model model = make_model("constant", builtin_constant(1, 1));
  const Torus t(1, 32);
  const CorrelationReport r = correlation_report(model, t, 0.5, 2048, 5, {0, 1});
  CHECK(r.rho == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
  CHECK(std::fabs(r.deviation) <= 4.0 * r.mean_se);
  CHECK(std::fabs(r.covariance) <= 4.0 * r.covariance_se);
  REQUIRE(r.site_mean.size() == 2);
  CHECK(std::fabs(r.site_mean[0] - r.rho) <= 4.0 * r.site_se[0]);

  const CorrelationReport zero = correlation_report(model, t, 0.0, 1000, 5);
  CHECK(zero.mean == 1.0);
  CHECK(zero.covariance == doctest::Approx(0.0));
  CHECK_THROWS_AS(correlation_report(model, t, 0.5, 999, 5), Error);
}

TEST_CASE("replacement check") {
  const Model model = make_model("constant", builtin_constant(1, 1));
  const Torus t(1, 32);
  const ReplacementResult r = replacement_check(model, t, {0, 1, 3}, 0.5, 1024, 6, true, 1, 200);
  CHECK(r.samples == 1024 * 32);
  CHECK(r.empirical.size() == 8);
  CHECK(r.tv <= 0.02);
  CHECK(r.ci.lo <= r.tv);
  const ReplacementResult empty = replacement_check(model, t, {}, 0.5, 64, 6, true, 1, 0);
  CHECK(empty.tv == 0.0);
  CHECK(code_of([&] { replacement_check(model, t, {0, 1, 2, 3, 4, 5, 6, 7, 8}, 0.5, 64, 6); }) ==
        ErrorCode::SetTooLarge);
}

TEST_CASE("perturbation bound examples") {
  // Point mass on S = {0} with law +1 against Rademacher(0).
  const PerturbationCheck a = perturbation_bound_check(1, 0.0, {{0b1, 1.0, {0.0, 1.0}}});
  CHECK(a.lhs == doctest::Approx(1.0));
  CHECK(a.chi2 == doctest::Approx(1.0));
  CHECK(a.rhs == doctest::Approx(1.0));
  CHECK(a.holds);
  // The empty subset leaves nu unchanged.
  const PerturbationCheck b = perturbation_bound_check(3, 0.3, {{0, 1.0, {1.0}}});
  CHECK(b.lhs == doctest::Approx(0.0));
  CHECK(b.rhs == doctest::Approx(0.0));
  CHECK(code_of([] { perturbation_bound_check(2, 1.0, {{0, 1.0, {1.0}}}); }) == ErrorCode::RhoDegenerate);
}

TEST_CASE("perturbation bound holds on random instances") {
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const double rho = -0.8 + 1.6 * rng.uniform();
    const int parts = 1 + static_cast<int>(rng.below(3));
    std::vector<SubsetPerturbation> mix;
    double total = 0.0;
    for (int j = 0; j < parts; ++j) {
      SubsetPerturbation s;
      s.subset = static_cast<std::uint32_t>(rng.below(1u << n));
      s.probability = 0.1 + rng.uniform();
      total += s.probability;
      const int size = __builtin_popcount(s.subset);
      s.law.resize(std::size_t{1} << size);
      double z = 0.0;
      for (double& v : s.law) z += v = rng.uniform();
      for (double& v : s.law) v /= z;
      mix.push_back(std::move(s));
    }
    for (auto& s : mix) s.probability /= total;
    const PerturbationCheck c = perturbation_bound_check(n, rho, mix);
    CHECK(c.lhs <= c.chi2 + 1e-12);
    CHECK(c.chi2 <= c.rhs + 1e-9);
    CHECK(c.holds);
  }
}

TEST_CASE("anticoncentration against the resolvent") {
  const int L = 32;
  const double theta = 4.0;
  for (int k : {1, 3}) {
    const AnticoncentrationResult r = anticoncentration(1, L, theta, k, 40000, 13, 0, 2);
    const double ip = oracle::relative_walk_resolvent(L, theta, k, 2, true);
    const double srw = oracle::relative_walk_resolvent(L, theta, k, 2, false);
    const double se_ip = std::sqrt(ip * (1 - ip) / r.reps), se_srw = std::sqrt(srw * (1 - srw) / r.reps);
    CHECK_MESSAGE(std::fabs(r.estimate - ip) <= 4.0 * se_ip, "k = " << k << " est " << r.estimate << " exact " << ip);
    CHECK_MESSAGE(std::fabs(r.srw_estimate - srw) <= 4.0 * se_srw, "k = " << k);
    CHECK(r.ci.lo <= r.estimate);
    CHECK(r.estimate <= r.ci.hi);
  }
  // Blocking can only push the pair apart.
  for (int k : {0, 1, 2, 5})
    CHECK(oracle::relative_walk_resolvent(L, theta, k, 3, true) <=
          oracle::relative_walk_resolvent(L, theta, k, 3, false) + 1e-12);
  CHECK(anticoncentration(1, 8, 1.0, 4, 100, 1).estimate == 1.0);
  CHECK(code_of([] { anticoncentration(1, 8, 1.0, 1, 100, 1, 3, 3); }) == ErrorCode::CoincidentStart);
}

TEST_CASE("IP(2) pair is never farther than the independent pair under the coupling") {
  const DominanceResult a = ip2_dominance_check(1, 64, {0, 1, 0, 1}, 0.1, 10000, 14);
  CHECK(a.violations == 0);
  CHECK(a.jumps > 0);
  CHECK(a.paths == 10000);
  const Torus t2(2, 16);
  const DominanceResult b = ip2_dominance_check(2, 16, {0, t2.index({1, 1}), 0, t2.index({1, 1})}, 0.5, 2000, 15);
  CHECK(b.violations == 0);
  CHECK(b.jumps > 0);
  // Starting the independent pair farther than the IP(2) pair breaks the precondition.
  CHECK(code_of([] { ip2_dominance_check(1, 64, {0, 1, 0, 5}, 0.1, 10, 1); }) == ErrorCode::PreconditionViolated);
}

TEST_CASE("walker return probability") {
  for (int L : {8, 32, 128})
    for (double t : {0.0, 0.001, 0.01, 0.5})
      CHECK(walker_return_probability(L, t) == doctest::Approx(return_probability_sum(L, t)).epsilon(1e-10));
  const double exact = walker_return_probability(32, 0.01);
  const Proportion mc = walker_return_mc(32, 0.01, 40000, 16);
  CHECK(std::fabs(mc.estimate - exact) <= 4.0 * std::sqrt(exact * (1 - exact) / mc.n));
  for (int L : {64, 128, 256}) {
    const double ratio = walker_return_probability(2 * L, 1.0) / walker_return_probability(L, 1.0);
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.65);
  }
}
