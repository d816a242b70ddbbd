#include "gex/graphical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gex/error.hpp"
#include "gex/rng.hpp"

namespace gex {

namespace {
constexpr std::uint64_t kMarkStream = 0x6d61726b73ULL;  // "marks"
constexpr std::uint64_t kAuxStream = 0x617578ULL;       // "aux"
}  // namespace

const char* to_string(Construction c) {
  switch (c) {
    case Construction::GC1: return "GC1";
    case Construction::GC2: return "GC2";
    case Construction::GC3: return "GC3";
  }
  return "?";
}

const char* to_string(MarkKind k) {
  switch (k) {
    case MarkKind::Exclusion: return "exclusion";
    case MarkKind::Glauber: return "glauber";
    case MarkKind::Refresh: return "refresh";
    case MarkKind::Black: return "black";
    case MarkKind::Blue: return "blue";
  }
  return "?";
}

namespace {

struct RateLayout {
  std::vector<MarkKind> kinds;
  std::vector<double> kind_rate;  // total over all locations
  std::vector<int> glauber_types;
  std::vector<double> glauber_weights;
  double glauber_total = 0.0;
  double total = 0.0;
};

RateLayout rate_layout(const Torus& t, const Decomposition& dec, Construction c) {
  RateLayout r;
  const double L2 = static_cast<double>(t.L()) * t.L();
  const double edges = t.num_edges();
  const double sites = t.N();
  if (c == Construction::GC3) {
    r.kinds.push_back(MarkKind::Black);
    r.kind_rate.push_back(edges * L2);
    r.kinds.push_back(MarkKind::Blue);
    r.kind_rate.push_back(edges * 2.0 * L2);
  } else {
    r.kinds.push_back(MarkKind::Exclusion);
    r.kind_rate.push_back(edges * L2);
  }
  const int first_glauber = c == Construction::GC1 ? 0 : 2;
  if (c != Construction::GC1) {
    r.kinds.push_back(MarkKind::Refresh);
    r.kind_rate.push_back(sites * (dec.entry(0).lambda + dec.entry(1).lambda));
  }
  for (int i = first_glauber; i < dec.q(); ++i) {
    r.glauber_types.push_back(i);
    r.glauber_weights.push_back(dec.entry(i).lambda);
    r.glauber_total += dec.entry(i).lambda;
  }
  if (!r.glauber_types.empty()) {
    r.kinds.push_back(MarkKind::Glauber);
    r.kind_rate.push_back(sites * r.glauber_total);
  }
  for (double v : r.kind_rate) r.total += v;
  return r;
}

}  // namespace

double expected_mark_count(const Torus& t, const Decomposition& dec, Construction construction, double T) {
  return rate_layout(t, dec, construction).total * T;
}

MarkStream generate_marks(const Torus& t, const Decomposition& dec, Construction construction, double T,
                          std::uint64_t seed) {
  if (!(T > 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be positive");
  t.require_model_radius(dec.shape().m);
  if (dec.shape().d != t.d()) fail(ErrorCode::InvalidArgument, "decomposition dimension differs from torus");
  const RateLayout layout = rate_layout(t, dec, construction);
  Rng rng(derive_seed(seed, kMarkStream, 0));
  MarkStream ms;
  ms.construction = construction;
  ms.horizon = T;
  ms.seed = seed;
  ms.d = t.d();
  ms.L = t.L();
  ms.marks.reserve(static_cast<std::size_t>(layout.total * T * 1.05) + 16);
  double now = 0.0;
  while (true) {
    const double next = now + rng.exponential(layout.total);
    if (next > T) break;
    if (!(next > now)) fail(ErrorCode::MarkTimeCollision, "two marks share a timestamp");
    now = next;
    const std::size_t k = rng.categorical(layout.kind_rate.data(), layout.kind_rate.size(), layout.total);
    Mark mark{now, layout.kinds[k], 0, -1};
    switch (mark.kind) {
      case MarkKind::Exclusion:
      case MarkKind::Black:
      case MarkKind::Blue:
        mark.location = static_cast<int>(rng.below(static_cast<std::uint64_t>(t.num_edges())));
        break;
      case MarkKind::Refresh:
        mark.location = static_cast<int>(rng.below(static_cast<std::uint64_t>(t.N())));
        break;
      case MarkKind::Glauber: {
        mark.location = static_cast<int>(rng.below(static_cast<std::uint64_t>(t.N())));
        const std::size_t j =
            rng.categorical(layout.glauber_weights.data(), layout.glauber_weights.size(), layout.glauber_total);
        mark.type = layout.glauber_types[j];
        break;
      }
    }
    ms.marks.push_back(mark);
  }
  return ms;
}

double AuxRandomness::uniform(std::size_t mark_index) const {
  return static_cast<double>(derive_seed(seed_, kAuxStream, mark_index) >> 11) * 0x1.0p-53;
}

int AuxRandomness::refresh_spin(std::size_t mark_index, double rho_bar) const {
  return uniform(mark_index) < 0.5 * (1.0 + rho_bar) ? 1 : -1;
}

bool AuxRandomness::coin(std::size_t mark_index) const {
  // Distinct sub-stream from refresh draws of the same mark.
  return (derive_seed(seed_ ^ 0xC01DC0FFEEULL, kAuxStream, mark_index) >> 63) != 0;
}

namespace {

void check_stream(const Torus& t, const MarkStream& ms, const Decomposition& dec) {
  if (ms.d != t.d() || ms.L != t.L()) fail(ErrorCode::InvalidArgument, "stream was generated on another torus");
  if (ms.construction == Construction::GC3)
    fail(ErrorCode::ConstructionMismatch, "forward spin evolution uses GC1 or GC2 streams");
  t.require_model_radius(dec.shape().m);
}

// Applies one mark to x; shared by evolve and grand_coupling.
class SpinStepper {
 public:
  SpinStepper(const Torus& t, const MarkStream& ms, const AuxRandomness& aux, const Decomposition& dec)
      : t_(t), ms_(ms), aux_(aux), dec_(dec), balls_(t.ball_table(dec.shape().m)), bsize_(dec.shape().size()) {}

  void apply(std::size_t index, SpinConfig& x) const {
    const Mark& mk = ms_.marks[index];
    switch (mk.kind) {
      case MarkKind::Exclusion:
        x.swap_sites(t_.edge_from(mk.location), t_.edge_to(mk.location));
        break;
      case MarkKind::Glauber: {
        if (ms_.construction == Construction::GC2 && mk.type < 2)
          fail(ErrorCode::ConstructionMismatch, "GC2 stream carries an oblivious Glauber mark");
        const int* ball = &balls_[static_cast<std::size_t>(mk.location) * static_cast<std::size_t>(bsize_)];
        x.set(mk.location, dec_.entry(mk.type).f(window_code(x, ball, bsize_)));
        break;
      }
      case MarkKind::Refresh:
        if (ms_.construction != Construction::GC2)
          fail(ErrorCode::ConstructionMismatch, "refresh marks belong to GC2 streams");
        x.set(mk.location, aux_.refresh_spin(index, dec_.rho_bar()));
        break;
      default:
        fail(ErrorCode::ConstructionMismatch, "GC3 marks cannot drive spin evolution");
    }
  }

 private:
  const Torus& t_;
  const MarkStream& ms_;
  const AuxRandomness& aux_;
  const Decomposition& dec_;
  std::vector<int> balls_;
  int bsize_;
};

}  // namespace

SpinConfig evolve(const Torus& t, const SpinConfig& x0, const MarkStream& ms, const AuxRandomness& aux,
                  const Decomposition& dec, const SpinObserver& observer) {
  check_stream(t, ms, dec);
  if (x0.size() != t.N()) fail(ErrorCode::InvalidArgument, "configuration size differs from torus");
  SpinStepper step(t, ms, aux, dec);
  SpinConfig x = x0;
  for (std::size_t i = 0; i < ms.marks.size(); ++i) {
    step.apply(i, x);
    if (observer) observer(i, x);
  }
  return x;
}

CoupledRun grand_coupling(const Torus& t, const MarkStream& ms, const AuxRandomness& aux, const Decomposition& dec,
                          const std::vector<SpinConfig>& initials, const std::vector<double>& times,
                          const CoupledObserver& observer) {
  check_stream(t, ms, dec);
  for (const auto& x : initials)
    if (x.size() != t.N()) fail(ErrorCode::InvalidArgument, "configuration size differs from torus");
  SpinStepper step(t, ms, aux, dec);
  CoupledRun run;
  run.finals = initials;
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  auto record = [&]() {
    std::vector<std::uint8_t> agree(static_cast<std::size_t>(t.N()), 1);
    for (int u = 0; u < t.N(); ++u)
      for (std::size_t k = 1; k < run.finals.size(); ++k)
        if (run.finals[k][u] != run.finals[0][u]) agree[static_cast<std::size_t>(u)] = 0;
    run.agreement.push_back(std::move(agree));
  };
  std::size_t next_time = 0;
  for (std::size_t i = 0; i < ms.marks.size(); ++i) {
    while (next_time < sorted.size() && sorted[next_time] < ms.marks[i].time) {
      record();
      ++next_time;
    }
    for (auto& x : run.finals) step.apply(i, x);
    if (observer) observer(i, ms.marks[i].time, run.finals);
  }
  while (next_time < sorted.size()) {
    record();
    ++next_time;
  }
  return run;
}

ZTrajectory z_process(const Torus& t, const ZConfig& z0, const MarkStream& ms, int m, const std::vector<double>& times) {
  if (ms.construction == Construction::GC1)
    fail(ErrorCode::ConstructionMismatch, "the independent-site process needs refresh marks (GC2 or GC3)");
  if (static_cast<int>(z0.size()) != t.N()) fail(ErrorCode::InvalidArgument, "Z size differs from torus");
  const std::vector<int> balls = t.ball_table(m);
  const int bsize = make_ball_shape(t.d(), m).size();
  ZTrajectory out;
  ZConfig z = z0;
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  std::size_t next_time = 0;
  for (const Mark& mk : ms.marks) {
    while (next_time < sorted.size() && sorted[next_time] < mk.time) {
      out.times.push_back(sorted[next_time++]);
      out.snapshots.push_back(z);
    }
    switch (mk.kind) {
      case MarkKind::Exclusion: {
        const int u = t.edge_from(mk.location), v = t.edge_to(mk.location);
        std::swap(z[static_cast<std::size_t>(u)], z[static_cast<std::size_t>(v)]);
        break;
      }
      case MarkKind::Black: {
        const int u = t.edge_from(mk.location), v = t.edge_to(mk.location);
        if (!z[static_cast<std::size_t>(u)] || !z[static_cast<std::size_t>(v)])
          std::swap(z[static_cast<std::size_t>(u)], z[static_cast<std::size_t>(v)]);
        break;
      }
      case MarkKind::Blue:
        break;
      case MarkKind::Refresh:
        z[static_cast<std::size_t>(mk.location)] = 1;
        break;
      case MarkKind::Glauber:
        for (int k = 0; k < bsize; ++k)
          z[static_cast<std::size_t>(balls[static_cast<std::size_t>(mk.location * bsize + k)])] = 0;
        break;
    }
  }
  while (next_time < sorted.size()) {
    out.times.push_back(sorted[next_time++]);
    out.snapshots.push_back(z);
  }
  out.final_state = std::move(z);
  return out;
}

std::vector<RegionSnapshot> regions(const Torus& t, const MarkStream& ms, const AuxRandomness& aux,
                                    const Decomposition& dec, const std::vector<double>& times) {
  if (ms.construction != Construction::GC2) fail(ErrorCode::ConstructionMismatch, "regions use a GC2 stream");
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  const CoupledRun run =
      grand_coupling(t, ms, aux, dec, {SpinConfig::all_plus(t.N()), SpinConfig::all_minus(t.N())}, sorted);
  const ZTrajectory z = z_process(t, ZConfig(static_cast<std::size_t>(t.N()), 0), ms, dec.shape().m, sorted);
  std::vector<RegionSnapshot> out;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    RegionSnapshot snap;
    snap.t = sorted[k];
    snap.region.resize(static_cast<std::size_t>(t.N()));
    for (std::size_t u = 0; u < snap.region.size(); ++u) {
      const bool red = !run.agreement[k][u];
      const bool blue = z.snapshots[k][u] != 0;
      if (red && blue) fail(ErrorCode::InvalidArgument, "internal: an independent site disagrees across the coupling");
      snap.region[u] = red ? Region::Red : (blue ? Region::Blue : Region::Green);
      if (red) ++snap.red;
      else if (blue) ++snap.blue;
      else ++snap.green;
    }
    out.push_back(std::move(snap));
  }
  return out;
}

int bad_tile_width(int L, double beta2) {
  return std::max(1, static_cast<int>(std::ceil(beta2 * std::log(static_cast<double>(L)))));
}

bool is_bad(const Torus& t, const ZConfig& z, double beta2) {
  if (t.d() != 1) fail(ErrorCode::DimensionUnsupported, "the BAD set is defined for d = 1 only");
  if (static_cast<int>(z.size()) != t.N()) fail(ErrorCode::InvalidArgument, "Z size differs from torus");
  const int L = t.L();
  const int w = bad_tile_width(L, beta2);
  const int tiles = (L + w - 1) / w;
  for (int l = 0; l <= tiles; ++l) {
    bool empty = true;
    for (int k = 0; k < w && empty; ++k)
      if (z[static_cast<std::size_t>((l * w + k) % L)]) empty = false;
    if (empty) return true;
  }
  return false;
}

AveragingTrajectory averaging_process(const Torus& t, const MarkStream& ms, const ZConfig& z0, int origin, int m) {
  if (ms.construction != Construction::GC3) fail(ErrorCode::ConstructionMismatch, "averaging process uses GC3 marks");
  if (static_cast<int>(z0.size()) != t.N()) fail(ErrorCode::InvalidArgument, "Z size differs from torus");
  const std::vector<int> balls = t.ball_table(m);
  const int bsize = make_ball_shape(t.d(), m).size();
  ZConfig z = z0;
  z[static_cast<std::size_t>(origin)] = 1;
  std::vector<double> h(static_cast<std::size_t>(t.N()), 0.0);
  h[static_cast<std::size_t>(origin)] = 1.0;
  double norm = 1.0;
  AveragingTrajectory out;
  out.times.push_back(0.0);
  out.norm_sq.push_back(norm);
  auto at = [](auto& v, int i) -> auto& { return v[static_cast<std::size_t>(i)]; };
  for (const Mark& mk : ms.marks) {
    switch (mk.kind) {
      case MarkKind::Black: {
        const int u = t.edge_from(mk.location), v = t.edge_to(mk.location);
        if (!at(z, u) || !at(z, v)) {
          std::swap(at(z, u), at(z, v));
          std::swap(at(h, u), at(h, v));
        }
        break;
      }
      case MarkKind::Blue: {
        const int u = t.edge_from(mk.location), v = t.edge_to(mk.location);
        if (at(z, u) && at(z, v)) {
          const double a = at(h, u), b = at(h, v), mean = 0.5 * (a + b);
          norm += 2 * mean * mean - a * a - b * b;
          at(h, u) = at(h, v) = mean;
        }
        break;
      }
      case MarkKind::Refresh:
        norm -= at(h, mk.location) * at(h, mk.location);
        at(h, mk.location) = 0.0;
        at(z, mk.location) = 1;
        break;
      case MarkKind::Glauber:
        for (int k = 0; k < bsize; ++k) {
          const int v = balls[static_cast<std::size_t>(mk.location * bsize + k)];
          norm -= at(h, v) * at(h, v);
          at(h, v) = 0.0;
          at(z, v) = 0;
        }
        break;
      case MarkKind::Exclusion:
        fail(ErrorCode::ConstructionMismatch, "GC3 streams carry no plain exclusion marks");
    }
    out.times.push_back(mk.time);
    out.norm_sq.push_back(std::max(0.0, norm));
  }
  out.final_h = std::move(h);
  return out;
}

}  // namespace gex
