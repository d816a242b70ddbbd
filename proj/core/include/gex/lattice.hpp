#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace gex {

// Coordinates on the torus; y is unused (0) when d == 1.
struct Site {
  int x = 0;
  int y = 0;
  bool operator==(const Site&) const = default;
};

using Offset = std::array<int, 2>;

// Canonical enumeration of B(0,m). Every local table in the library is
// indexed by a code whose bit k is set iff the spin at offsets[k] is +1.
//   d = 1: offsets -m, ..., +m (center at index m).
//   d = 2: offsets sorted by (L1 distance, dx, dy) (center at index 0).
struct BallShape {
  int d = 1;
  int m = 0;
  std::vector<Offset> offsets;
  int center = 0;

  int size() const { return static_cast<int>(offsets.size()); }
};

BallShape make_ball_shape(int d, int m);

// Sites are integers u = x + y*L. Edge e in [0, d*N) joins site e % N to its
// +1 neighbor along axis e / N.
class Torus {
 public:
  Torus(int d, int L);

  int d() const { return d_; }
  int L() const { return L_; }
  int N() const { return N_; }
  int num_edges() const { return d_ * N_; }

  int index(Site s) const;
  Site site(int u) const;

  // u shifted by delta along axis, reduced mod L.
  int shift(int u, int axis, int delta) const;
  int translate(int u, const Offset& off) const;

  // Order: +axis0, -axis0, +axis1, -axis1.
  std::vector<int> neighbors(int u) const;

  int edge_from(int e) const { return e % N_; }
  int edge_to(int e) const { return shift(e % N_, e / N_, 1); }

  // Sum over axes of min(|delta|, L - |delta|).
  int distance(int u, int v) const;

  // Sites of ball(u,m) in the canonical order of make_ball_shape(d, m).
  // Throws RadiusTooLarge if 2m+1 > L.
  std::vector<int> ball(int u, int m) const;

  // Flat table: entry u*|B| + k is the k-th site of ball(u,m).
  std::vector<int> ball_table(int m) const;

  // Requires L > 2m+1 so that B(0,m) embeds injectively with room to spare.
  void require_model_radius(int m) const;

 private:
  int d_;
  int L_;
  int N_;
};

class SpinConfig {
 public:
  SpinConfig() = default;
  SpinConfig(int N, int value);
  explicit SpinConfig(std::vector<std::int8_t> spins);

  static SpinConfig all_plus(int N) { return SpinConfig(N, 1); }
  static SpinConfig all_minus(int N) { return SpinConfig(N, -1); }

  int size() const { return static_cast<int>(s_.size()); }
  int operator[](int u) const { return s_[u]; }
  void set(int u, int v) { s_[u] = static_cast<std::int8_t>(v); }
  void swap_sites(int u, int v) { std::swap(s_[u], s_[v]); }
  const std::vector<std::int8_t>& spins() const { return s_; }

  SpinConfig flipped() const;
  long magnetization() const;
  // Coordinatewise x <= y.
  bool leq(const SpinConfig& other) const;
  bool operator==(const SpinConfig&) const = default;

 private:
  std::vector<std::int8_t> s_;
};

// Restriction of x to ball(u,m) in canonical order, as +-1 values.
std::vector<int> local_window(const Torus& t, const SpinConfig& x, int u, int m);

// Same window encoded as a table code (bit k set iff spin +1).
std::uint32_t window_code(const SpinConfig& x, const int* ball_sites, int ball_size);

}  // namespace gex
