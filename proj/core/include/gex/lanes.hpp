#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gex/flip_model.hpp"
#include "gex/lattice.hpp"
#include "gex/rng.hpp"

namespace gex {

// State of one site across 64 replicas. Bit l of p (m) is the spin of
// replica l's all-plus (all-minus) trajectory, set = +1; bit l of z marks
// membership of the site in replica l's independent-site set.
struct LaneSite {
  std::uint64_t p = 0;
  std::uint64_t m = 0;
  std::uint64_t z = 0;
};

// 64 grand-coupled replicas of the GC2 dynamics stored bit-sliced.
// Refresh and Glauber marks are drawn independently per lane. Exclusion
// marks are shared by all lanes of one engine: every lane has exactly the law
// of the process, but lanes of the same engine are not independent, so
// standard errors must be formed from per-engine aggregates.
class LaneEngine {
 public:
  static constexpr int kLanes = 64;

  LaneEngine(const Torus& t, const Decomposition& dec, std::uint64_t seed);

  const Torus& torus() const { return torus_; }
  double time() const { return now_; }

  // X+ all plus, X- all minus, Z empty, time 0.
  void reset();
  void set_state(std::vector<LaneSite> state);
  const std::vector<LaneSite>& state() const { return sites_; }

  // Runs every lane up to time target >= time().
  void advance_to(double target);

  // Lanes in which X+ and X- differ somewhere.
  std::uint64_t disagreeing_lanes() const;
  // Number of +1 spins of X+ in each lane.
  std::array<int, kLanes> plus_counts() const;
  // Number of pairs (u, u + e_axis) where X+ agrees, per lane.
  std::array<int, kLanes> adjacent_agreements(int axis) const;

  std::uint64_t exclusion_events() const { return exclusion_events_; }
  std::uint64_t glauber_events() const { return glauber_events_; }

 private:
  void run_exclusions(std::uint64_t count);
  void glauber_event();
  std::uint32_t random_edge();

  Torus torus_;
  const Decomposition* dec_;
  Rng rng_;
  std::vector<LaneSite> sites_;
  std::vector<int> edge_from_;
  std::vector<int> edge_to_;
  std::vector<int> balls_;
  int ball_size_;
  // Category 0 is refresh (weight lambda_1 + lambda_2); category k >= 1 is
  // decomposition entry k + 1.
  std::vector<double> weights_;
  double weight_total_;
  double exclusion_rate_;
  double glauber_rate_;
  double now_ = 0.0;
  std::uint64_t spare_bits_ = 0;
  bool has_spare_ = false;
  std::uint64_t exclusion_events_ = 0;
  std::uint64_t glauber_events_ = 0;
};

}  // namespace gex
