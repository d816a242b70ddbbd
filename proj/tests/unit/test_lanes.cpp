#include "doctest.h"

#include <cmath>

#include "gex/analysis.hpp"
#include "gex/lanes.hpp"
#include "oracles.hpp"

using namespace gex;

TEST_CASE("every lane has the exact chain's law at L = 4") {
  const LocalRateTable rates = builtin_demasi(5.0 / 12);
  const Decomposition dec = decompose(rates);
  const Torus t(1, 4);
  const double T = 0.5;
  const Eigen::MatrixXd P = oracle::transition_matrix(oracle::exact_chain(rates, 4), T);
  std::vector<double> plus(16, 0.0), minus(16, 0.0), exact_plus(16), exact_minus(16);
  const int engines = 400;
  const double w = 1.0 / (engines * LaneEngine::kLanes);
  for (int e = 0; e < engines; ++e) {
    LaneEngine eng(t, dec, static_cast<std::uint64_t>(e));
    eng.advance_to(T);
    for (int l = 0; l < LaneEngine::kLanes; ++l) {
      int cp = 0, cm = 0;
      for (int u = 0; u < 4; ++u) {
        if ((eng.state()[static_cast<std::size_t>(u)].p >> l) & 1ULL) cp |= 1 << u;
        if ((eng.state()[static_cast<std::size_t>(u)].m >> l) & 1ULL) cm |= 1 << u;
      }
      plus[static_cast<std::size_t>(cp)] += w;
      minus[static_cast<std::size_t>(cm)] += w;
    }
  }
  for (int k = 0; k < 16; ++k) {
    exact_plus[static_cast<std::size_t>(k)] = P(15, k);
    exact_minus[static_cast<std::size_t>(k)] = P(0, k);
  }
  CHECK(tv_exact_small(plus, exact_plus) <= 0.02);
  CHECK(tv_exact_small(minus, exact_minus) <= 0.02);
}

TEST_CASE("lanes keep the coupling ordered and independent sites coalesced") {
  const Decomposition dec = decompose(builtin_demasi(5.0 / 12));
  const Torus t(1, 32);
  LaneEngine eng(t, dec, 4);
  CHECK(eng.disagreeing_lanes() == ~0ULL);
  for (double time = 0.05; time <= 3.0; time += 0.05) {
    eng.advance_to(time);
    for (const LaneSite& s : eng.state()) {
      REQUIRE((s.m & ~s.p) == 0);
      REQUIRE((s.z & (s.p ^ s.m)) == 0);
    }
  }
  CHECK(eng.exclusion_events() > 0);
  eng.reset();
  CHECK(eng.disagreeing_lanes() == ~0ULL);
}

TEST_CASE("lane engines are deterministic in the seed") {
  const Decomposition dec = decompose(builtin_demasi(5.0 / 12));
  const Torus t(1, 16);
  LaneEngine a(t, dec, 11), c(t, dec, 11);
  a.advance_to(1.0);
  c.advance_to(1.0);
  for (std::size_t u = 0; u < 16; ++u) {
    CHECK(a.state()[u].p == c.state()[u].p);
    CHECK(a.state()[u].m == c.state()[u].m);
  }
}

TEST_CASE("shared exclusion leaves lanes nearly uncorrelated") {
  const Decomposition dec = decompose(builtin_demasi(5.0 / 12));
  const Torus t(1, 16);
  const int engines = 3000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int e = 0; e < engines; ++e) {
    LaneEngine eng(t, dec, static_cast<std::uint64_t>(1000 + e));
    eng.advance_to(0.5);
    const auto pc = eng.plus_counts();
    const double x = pc[0], y = pc[1];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double n = engines;
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double r = cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (syy / n - (sy / n) * (sy / n)));
  CHECK(std::fabs(r) <= 4.0 / std::sqrt(n));
}
