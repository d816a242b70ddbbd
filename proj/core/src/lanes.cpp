#include "gex/lanes.hpp"

#include <string>

#include "gex/error.hpp"

namespace gex {

LaneEngine::LaneEngine(const Torus& t, const Decomposition& dec, std::uint64_t seed)
    : torus_(t), dec_(&dec), rng_(seed), ball_size_(dec.shape().size()) {
  if (dec.shape().d != t.d()) fail(ErrorCode::InvalidArgument, "decomposition dimension differs from torus");
  t.require_model_radius(dec.shape().m);
  balls_ = t.ball_table(dec.shape().m);
  edge_from_.resize(static_cast<std::size_t>(t.num_edges()));
  edge_to_.resize(static_cast<std::size_t>(t.num_edges()));
  for (int e = 0; e < t.num_edges(); ++e) {
    edge_from_[static_cast<std::size_t>(e)] = t.edge_from(e);
    edge_to_[static_cast<std::size_t>(e)] = t.edge_to(e);
  }
  weights_.push_back(dec.entry(0).lambda + dec.entry(1).lambda);
  for (int i = 2; i < dec.q(); ++i) weights_.push_back(dec.entry(i).lambda);
  weight_total_ = 0.0;
  for (double w : weights_) weight_total_ += w;
  const double L2 = static_cast<double>(t.L()) * t.L();
  exclusion_rate_ = t.num_edges() * L2;
  glauber_rate_ = static_cast<double>(kLanes) * t.N() * weight_total_;
  reset();
}

void LaneEngine::reset() {
  sites_.assign(static_cast<std::size_t>(torus_.N()), LaneSite{~0ULL, 0ULL, 0ULL});
  now_ = 0.0;
}

void LaneEngine::set_state(std::vector<LaneSite> state) {
  if (static_cast<int>(state.size()) != torus_.N()) fail(ErrorCode::InvalidArgument, "lane state size differs from torus");
  sites_ = std::move(state);
  now_ = 0.0;
}

std::uint32_t LaneEngine::random_edge() {
  // 32-bit Lemire draws, two per generator output.
  const auto n = static_cast<std::uint32_t>(edge_from_.size());
  while (true) {
    std::uint32_t x;
    if (has_spare_) {
      x = static_cast<std::uint32_t>(spare_bits_ >> 32);
      has_spare_ = false;
    } else {
      spare_bits_ = rng_.bits();
      x = static_cast<std::uint32_t>(spare_bits_);
      has_spare_ = true;
    }
    const std::uint64_t m = static_cast<std::uint64_t>(x) * n;
    const auto low = static_cast<std::uint32_t>(m);
    if (low >= n || low >= (0u - n) % n) return static_cast<std::uint32_t>(m >> 32);
  }
}

void LaneEngine::run_exclusions(std::uint64_t count) {
  LaneSite* s = sites_.data();
  const int* from = edge_from_.data();
  const int* to = edge_to_.data();
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint32_t e = random_edge();
    std::swap(s[from[e]], s[to[e]]);
  }
  exclusion_events_ += count;
}

void LaneEngine::glauber_event() {
  const auto lane = static_cast<int>(rng_.below(kLanes));
  const auto u = static_cast<std::size_t>(rng_.below(static_cast<std::uint64_t>(torus_.N())));
  const std::size_t cat = rng_.categorical(weights_.data(), weights_.size(), weight_total_);
  const std::uint64_t bit = 1ULL << lane;
  LaneSite& site = sites_[u];
  if (cat == 0) {
    const bool plus = rng_.uniform() < 0.5 * (1.0 + dec_->rho_bar());
    site.p = plus ? site.p | bit : site.p & ~bit;
    site.m = plus ? site.m | bit : site.m & ~bit;
    site.z |= bit;
  } else {
    const BooleanUpdate& f = dec_->entry(static_cast<int>(cat) + 1).f;
    const int* ball = &balls_[u * static_cast<std::size_t>(ball_size_)];
    std::uint32_t cp = 0, cm = 0;
    for (int k = 0; k < ball_size_; ++k) {
      const LaneSite& v = sites_[static_cast<std::size_t>(ball[k])];
      cp |= static_cast<std::uint32_t>((v.p >> lane) & 1ULL) << k;
      cm |= static_cast<std::uint32_t>((v.m >> lane) & 1ULL) << k;
    }
    site.p = f(cp) > 0 ? site.p | bit : site.p & ~bit;
    site.m = f(cm) > 0 ? site.m | bit : site.m & ~bit;
    for (int k = 0; k < ball_size_; ++k) sites_[static_cast<std::size_t>(ball[k])].z &= ~bit;
  }
  ++glauber_events_;
}

void LaneEngine::advance_to(double target) {
  if (target < now_) fail(ErrorCode::InvalidArgument, "lane engine cannot run backward in time");
  while (true) {
    const double gap = rng_.exponential(glauber_rate_);
    if (now_ + gap > target) {
      run_exclusions(rng_.poisson(exclusion_rate_ * (target - now_)));
      now_ = target;
      return;
    }
    run_exclusions(rng_.poisson(exclusion_rate_ * gap));
    now_ += gap;
    glauber_event();
  }
}

std::uint64_t LaneEngine::disagreeing_lanes() const {
  std::uint64_t any = 0;
  for (const LaneSite& s : sites_) any |= s.p ^ s.m;
  return any;
}

namespace {
void add_bits(std::array<int, LaneEngine::kLanes>& acc, std::uint64_t word) {
  while (word) {
    acc[static_cast<std::size_t>(__builtin_ctzll(word))] += 1;
    word &= word - 1;
  }
}
}  // namespace

std::array<int, LaneEngine::kLanes> LaneEngine::plus_counts() const {
  std::array<int, kLanes> out{};
  for (const LaneSite& s : sites_) add_bits(out, s.p);
  return out;
}

std::array<int, LaneEngine::kLanes> LaneEngine::adjacent_agreements(int axis) const {
  if (axis < 0 || axis >= torus_.d()) fail(ErrorCode::InvalidArgument, "axis out of range");
  std::array<int, kLanes> out{};
  for (int u = 0; u < torus_.N(); ++u) {
    const int v = torus_.shift(u, axis, 1);
    add_bits(out, ~(sites_[static_cast<std::size_t>(u)].p ^ sites_[static_cast<std::size_t>(v)].p));
  }
  return out;
}

}  // namespace gex
