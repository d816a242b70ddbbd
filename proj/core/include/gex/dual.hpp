#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "gex/flip_model.hpp"
#include "gex/graphical.hpp"
#include "gex/lattice.hpp"
#include "gex/rng.hpp"

namespace gex {

// A word of the alphabet: a root integer followed by ball-offset indices.
// Ordered by root, then lexicographically by path (a prefix precedes its
// extensions).
struct ParticleLabel {
  int root = 0;
  std::vector<std::uint8_t> path;

  ParticleLabel child(int k) const;
  bool is_descendant_of(const ParticleLabel& other) const;
  std::strong_ordering operator<=>(const ParticleLabel& other) const;
  bool operator==(const ParticleLabel& other) const = default;
};

constexpr double kNever = std::numeric_limits<double>::infinity();

struct IbpNode {
  int parent = -1;     // -1 for roots
  int slot = -1;       // index of this node among its parent's children
  double birth = 0.0;
  double death = kNever;  // ring time; kNever if the clock had not rung by the horizon
  int type = -1;          // 0-based decomposition index of the ring, -1 if none
  int first_child = -1;   // children occupy [first_child, first_child + |B|)
};

struct IbpTree {
  double horizon = 0.0;
  int ball_size = 0;
  std::vector<ParticleLabel> root_labels;
  std::vector<int> roots;  // node ids, in root_labels order
  std::vector<IbpNode> nodes;

  bool alive_at(int node, double t) const {
    const IbpNode& v = nodes[static_cast<std::size_t>(node)];
    return v.birth <= t && t < v.death;
  }
  // Nodes alive at the horizon, ascending id.
  std::vector<int> leaves() const;
  ParticleLabel label(int node) const;
};

// Independent IBPs from each root, truncated at T. Throws TreeSizeExplosion
// when more than max_alive particles are alive at once.
IbpTree run_ibp(const std::vector<ParticleLabel>& roots, const Decomposition& dec, double T, std::uint64_t seed,
                std::size_t max_alive = 1'000'000);

// Spin of every root given spins of the leaves (in leaves() order).
std::vector<int> spins_atop(const IbpTree& tree, const Decomposition& dec, const std::vector<int>& leaf_spins);

struct PivotalSet {
  std::vector<int> members;  // node (IBP) or group (BEP) ids alive at the query time, ascending
  bool exact = true;
};

// Exact pivotal set of the roots' update functions at time t <= horizon.
PivotalSet pivotal_ibp(const IbpTree& tree, const Decomposition& dec, double t);

// A group of BEP particles sharing a site and clocks, identified by its
// minimal member label.
struct BepGroup {
  ParticleLabel label;
  double birth = 0.0;
  double death = kNever;
  int type = -1;
  std::vector<int> children;  // group id per ball offset, filled on ring
  // (time, site) at birth and after every move.
  std::vector<std::pair<double, int>> trajectory;

  int site_at(double t) const;
};

struct BepHistory {
  double horizon = 0.0;
  int d = 1;
  int L = 2;
  std::vector<int> sites;  // E, in input order
  std::vector<int> roots;  // group id per site of E
  std::vector<BepGroup> groups;
  // Marks met by the particles, in BEP time (increasing).
  std::vector<Mark> marks;

  bool alive_at(int group, double t) const {
    const BepGroup& g = groups[static_cast<std::size_t>(group)];
    return g.birth <= t && t < g.death;
  }
  // Groups alive at the horizon, ascending id.
  std::vector<int> leaves() const;
};

// BEP from E on the torus: exclusion clocks L^2 per edge (sampled only on
// edges next to particles), Glauber clocks per group.
BepHistory run_bep(const Torus& t, const std::vector<int>& E, const Decomposition& dec, double T, std::uint64_t seed,
                   std::size_t max_groups = 1'000'000);

// The update history of E at time `time` read backward from a GC1 stream
// (ball radius m), as a BEP on [0, time]. Spins atop with leaf spins x(site)
// equal the forward evolution of x over the marks up to `time`, on E.
BepHistory history_from_marks(const Torus& t, const std::vector<int>& E, const MarkStream& ms, int m, double time,
                              std::size_t max_groups = 1'000'000);

// Leaf spins in leaves() order; one value per group.
std::vector<int> spins_atop(const BepHistory& hist, const Decomposition& dec, const std::vector<int>& leaf_spins);

// Pivotal recursion treating shared groups as independent arguments; a
// superset of the true pivotal set.
PivotalSet pivotal_bep_superset(const BepHistory& hist, const Decomposition& dec, double t);

// Root spin of one IBP at time t with leaves iid Rademacher(rho0), sampled
// lazily: subtrees are expanded only until the node's update is decided.
int sample_spin_atop(const Decomposition& dec, double t, double rho0, Rng& rng);

// Per-time Monte Carlo estimates over IBPs from one root.
struct SurvivalEstimate {
  std::vector<double> t;
  std::vector<double> phi;       // P(pivotal set nonempty)
  std::vector<double> phi_se;
  std::vector<double> psi;       // E |pivotal set|
  std::vector<double> psi_se;
  std::vector<double> theta;     // E[root spin | extinct], NaN without extinct samples
  std::vector<double> theta_se;
  std::vector<long> extinct;
  long reps = 0;
};

// Throws NoExtinctionSamples if require_theta and some time has no extinct sample.
SurvivalEstimate estimate_survival_functions(const Decomposition& dec, const std::vector<double>& times, long reps,
                                             std::uint64_t seed, int workers = 1, bool require_theta = false);

// Outcome of the BEP-IBP coupling restricted to the shared pivotal skeleton:
// while successful, the BEP pivotal particles are the IBP pivotal particles
// placed on the torus, so only they are simulated.
struct CouplingOutcome {
  bool success = true;
  double interaction_time = kNever;  // first ring of a pivotal particle with another within distance m
  double extinction_time = kNever;   // pivotal set empty
  int max_pivotal = 0;
  std::vector<int> root_spins;       // constant root values at extinction (0 if undecided)
  std::uint64_t moves = 0;
};

CouplingOutcome couple_bep_ibp(const Torus& t, const std::vector<int>& E, const Decomposition& dec, double T,
                               std::uint64_t seed, std::size_t max_alive = 1'000'000);

// One node per line: label, birth, death, type (and site run-length list for BEP).
void write_tree(std::ostream& os, const IbpTree& tree);
void write_history(std::ostream& os, const BepHistory& hist);

}  // namespace gex
