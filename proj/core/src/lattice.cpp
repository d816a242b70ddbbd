#include "gex/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "gex/error.hpp"

namespace gex {

BallShape make_ball_shape(int d, int m) {
  if (d != 1 && d != 2) fail(ErrorCode::DimensionUnsupported, "d must be 1 or 2");
  if (m < 0) fail(ErrorCode::InvalidArgument, "radius must be nonnegative");
  BallShape b;
  b.d = d;
  b.m = m;
  if (d == 1) {
    for (int k = -m; k <= m; ++k) b.offsets.push_back({k, 0});
    b.center = m;
    return b;
  }
  for (int dx = -m; dx <= m; ++dx)
    for (int dy = -m; dy <= m; ++dy)
      if (std::abs(dx) + std::abs(dy) <= m) b.offsets.push_back({dx, dy});
  std::sort(b.offsets.begin(), b.offsets.end(), [](const Offset& a, const Offset& c) {
    const int da = std::abs(a[0]) + std::abs(a[1]);
    const int dc = std::abs(c[0]) + std::abs(c[1]);
    if (da != dc) return da < dc;
    return a < c;
  });
  b.center = 0;
  return b;
}

Torus::Torus(int d, int L) : d_(d), L_(L), N_(0) {
  if (d != 1 && d != 2) fail(ErrorCode::DimensionUnsupported, "d must be 1 or 2");
  if (L < 2) fail(ErrorCode::InvalidArgument, "L must be at least 2");
  N_ = d == 1 ? L : L * L;
}

int Torus::index(Site s) const {
  auto mod = [this](int v) { return ((v % L_) + L_) % L_; };
  return d_ == 1 ? mod(s.x) : mod(s.x) + L_ * mod(s.y);
}

Site Torus::site(int u) const {
  if (d_ == 1) return {u, 0};
  return {u % L_, u / L_};
}

int Torus::shift(int u, int axis, int delta) const {
  if (axis == 0) {
    const int x = u % L_;
    const int nx = ((x + delta) % L_ + L_) % L_;
    return u - x + nx;
  }
  const int y = u / L_;
  const int ny = ((y + delta) % L_ + L_) % L_;
  return u + (ny - y) * L_;
}

int Torus::translate(int u, const Offset& off) const {
  int v = shift(u, 0, off[0]);
  if (d_ == 2) v = shift(v, 1, off[1]);
  return v;
}

std::vector<int> Torus::neighbors(int u) const {
  std::vector<int> out;
  for (int a = 0; a < d_; ++a) {
    out.push_back(shift(u, a, 1));
    out.push_back(shift(u, a, -1));
  }
  return out;
}

int Torus::distance(int u, int v) const {
  const Site a = site(u);
  const Site b = site(v);
  auto axis = [this](int p, int q) {
    const int delta = std::abs(p - q);
    return std::min(delta, L_ - delta);
  };
  return axis(a.x, b.x) + (d_ == 2 ? axis(a.y, b.y) : 0);
}

std::vector<int> Torus::ball(int u, int m) const {
  if (2 * m + 1 > L_)
    fail(ErrorCode::RadiusTooLarge, "2m+1 = " + std::to_string(2 * m + 1) + " exceeds L");
  const BallShape shape = make_ball_shape(d_, m);
  std::vector<int> out;
  out.reserve(shape.offsets.size());
  for (const auto& off : shape.offsets) out.push_back(translate(u, off));
  return out;
}

std::vector<int> Torus::ball_table(int m) const {
  const BallShape shape = make_ball_shape(d_, m);
  if (2 * m + 1 > L_) fail(ErrorCode::RadiusTooLarge, "2m+1 exceeds L");
  std::vector<int> table;
  table.reserve(static_cast<std::size_t>(N_) * shape.offsets.size());
  for (int u = 0; u < N_; ++u)
    for (const auto& off : shape.offsets) table.push_back(translate(u, off));
  return table;
}

void Torus::require_model_radius(int m) const {
  if (!(L_ > 2 * m + 1))
    fail(ErrorCode::RadiusTooLarge,
         "model radius m = " + std::to_string(m) + " needs L > 2m+1, got L = " + std::to_string(L_));
}

SpinConfig::SpinConfig(int N, int value) : s_(static_cast<std::size_t>(N), static_cast<std::int8_t>(value)) {
  if (value != 1 && value != -1) fail(ErrorCode::InvalidArgument, "spins are +-1");
}

SpinConfig::SpinConfig(std::vector<std::int8_t> spins) : s_(std::move(spins)) {
  for (auto v : s_)
    if (v != 1 && v != -1) fail(ErrorCode::InvalidArgument, "spins are +-1");
}

SpinConfig SpinConfig::flipped() const {
  SpinConfig out = *this;
  for (auto& v : out.s_) v = static_cast<std::int8_t>(-v);
  return out;
}

long SpinConfig::magnetization() const {
  long m = 0;
  for (auto v : s_) m += v;
  return m;
}

bool SpinConfig::leq(const SpinConfig& other) const {
  for (std::size_t i = 0; i < s_.size(); ++i)
    if (s_[i] > other.s_[i]) return false;
  return true;
}

std::vector<int> local_window(const Torus& t, const SpinConfig& x, int u, int m) {
  std::vector<int> out;
  for (int v : t.ball(u, m)) out.push_back(x[v]);
  return out;
}

std::uint32_t window_code(const SpinConfig& x, const int* ball_sites, int ball_size) {
  std::uint32_t code = 0;
  for (int k = 0; k < ball_size; ++k)
    if (x[ball_sites[k]] > 0) code |= 1u << k;
  return code;
}

}  // namespace gex
