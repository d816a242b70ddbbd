#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gex/flip_model.hpp"
#include "gex/lattice.hpp"

namespace gex {

// GC1: Glauber type i at rate lambda_i per site.
// GC2: Refresh at lambda_1 + lambda_2 per site, Glauber types i >= 3.
// GC3: GC2 with exclusion replaced by Black (L^2) and Blue (2 L^2) edge marks.
enum class Construction { GC1, GC2, GC3 };
const char* to_string(Construction c);

enum class MarkKind : std::uint8_t { Exclusion, Glauber, Refresh, Black, Blue };
const char* to_string(MarkKind k);

struct Mark {
  double time;
  MarkKind kind;
  int location;  // edge index for Exclusion/Black/Blue, site otherwise
  int type;      // 0-based decomposition index for Glauber, -1 otherwise
};

struct MarkStream {
  Construction construction = Construction::GC1;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  int d = 1;
  int L = 2;
  std::vector<Mark> marks;
};

// Superposition sampled with exponential gaps at the total rate and a
// categorical choice of kind, location and type. Times are strictly
// increasing; a tie raises MarkTimeCollision.
MarkStream generate_marks(const Torus& t, const Decomposition& dec, Construction construction, double T,
                          std::uint64_t seed);

// Expected number of marks of a stream on [0,T].
double expected_mark_count(const Torus& t, const Decomposition& dec, Construction construction, double T);

// Draws attached to mark identities, never to consumption order, so every
// trajectory of a grand coupling reads the same values.
class AuxRandomness {
 public:
  explicit AuxRandomness(std::uint64_t seed) : seed_(seed) {}
  int refresh_spin(std::size_t mark_index, double rho_bar) const;
  bool coin(std::size_t mark_index) const;
  std::uint64_t seed() const { return seed_; }

 private:
  double uniform(std::size_t mark_index) const;
  std::uint64_t seed_;
};

// Called after each applied mark with (mark index, configuration).
using SpinObserver = std::function<void(std::size_t, const SpinConfig&)>;

// Piecewise-constant evolution on [0, horizon] (GC1 or GC2 only).
SpinConfig evolve(const Torus& t, const SpinConfig& x0, const MarkStream& ms, const AuxRandomness& aux,
                  const Decomposition& dec, const SpinObserver& observer = {});

struct CoupledRun {
  std::vector<SpinConfig> finals;
  // For each requested time: 1 where all trajectories agree.
  std::vector<std::vector<std::uint8_t>> agreement;
};

using CoupledObserver = std::function<void(std::size_t, double, const std::vector<SpinConfig>&)>;

// All initial conditions driven by the same (ms, aux).
CoupledRun grand_coupling(const Torus& t, const MarkStream& ms, const AuxRandomness& aux, const Decomposition& dec,
                          const std::vector<SpinConfig>& initials, const std::vector<double>& times = {},
                          const CoupledObserver& observer = {});

using ZConfig = std::vector<std::uint8_t>;

struct ZTrajectory {
  std::vector<double> times;
  std::vector<ZConfig> snapshots;  // state at each requested time
  ZConfig final_state;
};

// Independent-site process (GC2 or GC3 stream): Exclusion swaps membership,
// Refresh adds the site, Glauber at u removes ball(u,m); under GC3 a Black
// mark swaps when at least one endpoint is outside Z.
ZTrajectory z_process(const Torus& t, const ZConfig& z0, const MarkStream& ms, int m,
                      const std::vector<double>& times = {});

enum class Region : std::uint8_t { Red = 0, Blue = 1, Green = 2 };

struct RegionSnapshot {
  double t;
  std::vector<Region> region;
  int red = 0;
  int blue = 0;
  int green = 0;
};

// Red = {X+ != X-}, Blue = Z from the empty set, Green = the rest.
std::vector<RegionSnapshot> regions(const Torus& t, const MarkStream& ms, const AuxRandomness& aux,
                                    const Decomposition& dec, const std::vector<double>& times);

// d = 1 only. Tiles [l w, (l+1) w - 1] (mod L), w = ceil(beta2 log L),
// l = 0..ceil(L/w); true iff some tile misses z.
bool is_bad(const Torus& t, const ZConfig& z, double beta2);
int bad_tile_width(int L, double beta2);

struct AveragingTrajectory {
  std::vector<double> times;     // 0 and every mark time
  std::vector<double> norm_sq;   // ||H||_2^2 after each entry of times
  std::vector<double> final_h;
};

// Aldous averaging process driven by a GC3 stream. Z starts from z0 plus the
// origin; H starts at the indicator of the origin.
AveragingTrajectory averaging_process(const Torus& t, const MarkStream& ms, const ZConfig& z0, int origin, int m);

}  // namespace gex
