// Pivotal-pruned IBP: only particles in the current pivotal set are kept.
// Every internal node records, per child slot, whether the child is fixed to
// a constant, still pivotal ("live"), or dropped. Slots only ever move from
// live to fixed or dropped: fixing more arguments of an increasing function
// cannot make a non-pivotal argument pivotal.

#include <algorithm>
#include <cmath>
#include <string>

#include "gex/dual.hpp"
#include "gex/error.hpp"
#include "gex/parallel.hpp"

namespace gex {

namespace {

constexpr std::uint64_t kSurvivalStream = 0x7375727669ULL;  // "survi"
constexpr std::uint64_t kCouplingStream = 0x636f75706cULL;  // "coupl"

// (type, fixed slots) -> constant value or restricted pivotal mask, cached
// by the ternary code sum_k 3^k s_k (s = 0 free, 1 fixed -1, 2 fixed +1).
class RestrictionCache {
 public:
  struct Entry {
    std::int8_t state = 0;  // 0 unknown, 1 computed
    std::int8_t constant = 0;
    std::uint32_t pivotal = 0;
  };

  explicit RestrictionCache(const Decomposition& dec) : dec_(dec), n_(dec.n()) {
    if (n_ <= 10) {
      std::size_t size = 1;
      for (int k = 0; k < n_; ++k) size *= 3;
      tables_.assign(static_cast<std::size_t>(dec.q()), std::vector<Entry>(size));
    }
  }

  Entry lookup(int type, std::uint32_t fixed, std::uint32_t values) {
    if (tables_.empty()) return compute(type, fixed, values);
    std::size_t code = 0, pow = 1;
    for (int k = 0; k < n_; ++k, pow *= 3)
      if (fixed >> k & 1u) code += pow * ((values >> k & 1u) ? 2 : 1);
    Entry& e = tables_[static_cast<std::size_t>(type)][code];
    if (!e.state) e = compute(type, fixed, values);
    return e;
  }

 private:
  Entry compute(int type, std::uint32_t fixed, std::uint32_t values) const {
    const BooleanUpdate& f = dec_.entry(type).f;
    Entry e;
    e.state = 1;
    if (auto c = f.restricted_constant(fixed, values))
      e.constant = static_cast<std::int8_t>(*c);
    else
      e.pivotal = f.restricted_pivotal_mask(fixed, values);
    return e;
  }

  const Decomposition& dec_;
  int n_;
  std::vector<std::vector<Entry>> tables_;
};

class PivotalIbp {
 public:
  PivotalIbp(const Decomposition& dec, RestrictionCache& cache, const Torus* torus, std::size_t max_alive)
      : dec_(dec), cache_(cache), torus_(torus), n_(dec.n()), max_alive_(max_alive) {
    if (torus_) {
      shape_ = dec.shape();
    }
  }

  void reset(const std::vector<int>& root_sites) {
    nodes_.clear();
    child_ids_.clear();
    alive_.clear();
    root_values_.assign(root_sites.size(), 0);
    for (std::size_t r = 0; r < root_sites.size(); ++r) {
      Node v;
      v.root = static_cast<int>(r);
      v.site = root_sites[r];
      add_alive(new_node(v));
    }
  }

  const std::vector<int>& alive() const { return alive_; }
  int site(int v) const { return nodes_[static_cast<std::size_t>(v)].site; }
  void set_site(int v, int s) { nodes_[static_cast<std::size_t>(v)].site = s; }
  const std::vector<int>& root_values() const { return root_values_; }

  void ring(int v, int type) {
    remove_alive(v);
    const BooleanUpdate& f = dec_.entry(type).f;
    if (auto c = f.constant_value()) {
      settle(v, *c);
      return;
    }
    const std::uint32_t mask = cache_.lookup(type, 0, 0).pivotal;
    const int base = static_cast<int>(child_ids_.size());
    child_ids_.resize(child_ids_.size() + static_cast<std::size_t>(n_), -1);
    {
      Node& node = nodes_[static_cast<std::size_t>(v)];
      node.type = type;
      node.live = mask;
      node.child_base = base;
    }
    const Node parent = nodes_[static_cast<std::size_t>(v)];
    for (int k = 0; k < n_; ++k) {
      if (!(mask >> k & 1u)) continue;
      Node c;
      c.parent = v;
      c.slot = k;
      c.root = parent.root;
      if (torus_) c.site = torus_->translate(parent.site, shape_.offsets[static_cast<std::size_t>(k)]);
      const int id = new_node(c);
      child_ids_[static_cast<std::size_t>(base + k)] = id;
      add_alive(id);
    }
    if (alive_.size() > max_alive_) fail(ErrorCode::TreeSizeExplosion, "pivotal set exceeded the alive-particle cap");
  }

 private:
  struct Node {
    int parent = -1;
    int slot = -1;
    int root = 0;
    int type = -1;
    std::uint32_t fixed = 0;
    std::uint32_t values = 0;
    std::uint32_t live = 0;
    int child_base = -1;
    int alive_pos = -1;
    int site = 0;
  };

  int new_node(const Node& v) {
    nodes_.push_back(v);
    return static_cast<int>(nodes_.size()) - 1;
  }
  void add_alive(int v) {
    nodes_[static_cast<std::size_t>(v)].alive_pos = static_cast<int>(alive_.size());
    alive_.push_back(v);
  }
  void remove_alive(int v) {
    const int p = nodes_[static_cast<std::size_t>(v)].alive_pos;
    const int last = alive_.back();
    alive_[static_cast<std::size_t>(p)] = last;
    nodes_[static_cast<std::size_t>(last)].alive_pos = p;
    alive_.pop_back();
    nodes_[static_cast<std::size_t>(v)].alive_pos = -1;
  }

  void drop(int v) {
    stack_.clear();
    stack_.push_back(v);
    while (!stack_.empty()) {
      const int x = stack_.back();
      stack_.pop_back();
      Node& node = nodes_[static_cast<std::size_t>(x)];
      if (node.alive_pos >= 0) {
        remove_alive(x);
        continue;
      }
      for (int k = 0; k < n_; ++k)
        if (node.live >> k & 1u) stack_.push_back(child_ids_[static_cast<std::size_t>(node.child_base + k)]);
      node.live = 0;
    }
  }

  // Node v became constant with value val; propagate toward the root.
  void settle(int v, int val) {
    while (true) {
      const Node& node = nodes_[static_cast<std::size_t>(v)];
      if (node.parent < 0) {
        root_values_[static_cast<std::size_t>(node.root)] = val;
        return;
      }
      const int p = node.parent;
      const int s = node.slot;
      Node& par = nodes_[static_cast<std::size_t>(p)];
      par.fixed |= 1u << s;
      if (val > 0) par.values |= 1u << s;
      par.live &= ~(1u << s);
      const RestrictionCache::Entry e = cache_.lookup(par.type, par.fixed, par.values);
      if (e.constant != 0) {
        const std::uint32_t live = par.live;
        const int base = par.child_base;
        for (int k = 0; k < n_; ++k)
          if (live >> k & 1u) drop(child_ids_[static_cast<std::size_t>(base + k)]);
        nodes_[static_cast<std::size_t>(p)].live = 0;
        v = p;
        val = e.constant;
        continue;
      }
      const std::uint32_t lost = par.live & ~e.pivotal;
      const int base = par.child_base;
      nodes_[static_cast<std::size_t>(p)].live &= e.pivotal;
      for (int k = 0; k < n_; ++k)
        if (lost >> k & 1u) drop(child_ids_[static_cast<std::size_t>(base + k)]);
      return;
    }
  }

  const Decomposition& dec_;
  RestrictionCache& cache_;
  const Torus* torus_;
  BallShape shape_;
  int n_;
  std::size_t max_alive_;
  std::vector<Node> nodes_;
  std::vector<int> child_ids_;
  std::vector<int> alive_;
  std::vector<int> stack_;
  std::vector<int> root_values_;
};

struct SurvivalAccumulator {
  std::vector<double> nonempty, size, size_sq, extinct, root_sum;
  explicit SurvivalAccumulator(std::size_t n) : nonempty(n), size(n), size_sq(n), extinct(n), root_sum(n) {}
  void merge(const SurvivalAccumulator& o) {
    for (std::size_t i = 0; i < nonempty.size(); ++i) {
      nonempty[i] += o.nonempty[i];
      size[i] += o.size[i];
      size_sq[i] += o.size_sq[i];
      extinct[i] += o.extinct[i];
      root_sum[i] += o.root_sum[i];
    }
  }
};

}  // namespace

SurvivalEstimate estimate_survival_functions(const Decomposition& dec, const std::vector<double>& times, long reps,
                                             std::uint64_t seed, int workers, bool require_theta) {
  if (reps < 100) fail(ErrorCode::InvalidArgument, "at least 100 replicas are required");
  std::vector<double> grid = times;
  if (!std::is_sorted(grid.begin(), grid.end())) fail(ErrorCode::InvalidArgument, "times must be sorted");
  if (!grid.empty() && grid.front() < 0.0) fail(ErrorCode::InvalidArgument, "times must be nonnegative");
  const std::size_t G = grid.size();
  constexpr long kChunk = 1000;
  const long chunks = (reps + kChunk - 1) / kChunk;
  std::vector<SurvivalAccumulator> parts(static_cast<std::size_t>(chunks), SurvivalAccumulator(G));
  const double lambda = dec.lambda_total();
  parallel_for(static_cast<std::size_t>(chunks), workers, [&](std::size_t c) {
    RestrictionCache cache(dec);
    PivotalIbp ibp(dec, cache, nullptr, 10'000'000);
    SurvivalAccumulator& acc = parts[c];
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(reps, begin + kChunk);
    for (long rep = begin; rep < end; ++rep) {
      Rng rng(derive_seed(seed, kSurvivalStream, static_cast<std::uint64_t>(rep)));
      ibp.reset({0});
      double now = 0.0;
      std::size_t g = 0;
      while (g < G) {
        const std::size_t k = ibp.alive().size();
        const double next = k == 0 ? kNever : now + rng.exponential(lambda * static_cast<double>(k));
        for (; g < G && grid[g] < next; ++g) {
          const double kk = static_cast<double>(k);
          acc.size[g] += kk;
          acc.size_sq[g] += kk * kk;
          if (k > 0) {
            acc.nonempty[g] += 1;
          } else {
            acc.extinct[g] += 1;
            acc.root_sum[g] += ibp.root_values()[0];
          }
        }
        if (g >= G) break;
        now = next;
        const int v = ibp.alive()[rng.below(k)];
        ibp.ring(v, static_cast<int>(rng.categorical(dec.weights().data(), dec.weights().size(), lambda)));
      }
    }
  });
  SurvivalAccumulator total(G);
  for (const auto& p : parts) total.merge(p);
  SurvivalEstimate out;
  out.t = grid;
  out.reps = reps;
  const double n = static_cast<double>(reps);
  for (std::size_t i = 0; i < G; ++i) {
    const double phi = total.nonempty[i] / n;
    out.phi.push_back(phi);
    out.phi_se.push_back(std::sqrt(phi * (1 - phi) / n));
    const double psi = total.size[i] / n;
    out.psi.push_back(psi);
    out.psi_se.push_back(std::sqrt(std::max(0.0, total.size_sq[i] / n - psi * psi) / n));
    out.extinct.push_back(static_cast<long>(total.extinct[i]));
    if (total.extinct[i] > 0) {
      const double th = total.root_sum[i] / total.extinct[i];
      out.theta.push_back(th);
      out.theta_se.push_back(std::sqrt(std::max(0.0, 1 - th * th) / total.extinct[i]));
    } else {
      if (require_theta) fail(ErrorCode::NoExtinctionSamples, "no extinct replica at some requested time");
      out.theta.push_back(std::nan(""));
      out.theta_se.push_back(std::nan(""));
    }
  }
  return out;
}

namespace {

// Minimum torus distance over pairs of alive pivotal particles.
int min_pair_distance(const Torus& t, const PivotalIbp& ibp) {
  const auto& a = ibp.alive();
  int best = t.d() * t.L();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) best = std::min(best, t.distance(ibp.site(a[i]), ibp.site(a[j])));
  return best;
}

// `count` uniformized moves of the alive pivotal particles: each particle
// proposes each incident edge at rate L^2, and an edge joining two particles
// is proposed twice, so it is accepted with probability 1/2 and swaps both.
// While all particles are at distance >= 2, moves are independent walks and
// are taken in bulk.
void move_particles(const Torus& t, PivotalIbp& ibp, std::uint64_t count, Rng& rng) {
  const int d = t.d();
  while (count > 0) {
    const auto& a = ibp.alive();
    const std::size_t k = a.size();
    const int r = min_pair_distance(t, ibp);
    if (r >= 2) {
      std::uint64_t chunk = std::min<std::uint64_t>(count, static_cast<std::uint64_t>(r - 1));
      count -= chunk;
      std::uint64_t left = chunk;
      for (std::size_t i = 0; i < k && left > 0; ++i) {
        const std::uint64_t ni = i + 1 == k ? left : rng.binomial(left, 1.0 / static_cast<double>(k - i));
        left -= ni;
        if (ni == 0) continue;
        int u = ibp.site(a[i]);
        std::uint64_t nx = d == 1 ? ni : rng.binomial(ni, 0.5);
        const std::uint64_t ny = ni - nx;
        const long dx = 2 * static_cast<long>(rng.binomial(nx, 0.5)) - static_cast<long>(nx);
        u = t.shift(u, 0, static_cast<int>(dx % t.L()));
        if (ny > 0) {
          const long dy = 2 * static_cast<long>(rng.binomial(ny, 0.5)) - static_cast<long>(ny);
          u = t.shift(u, 1, static_cast<int>(dy % t.L()));
        }
        ibp.set_site(a[i], u);
      }
      continue;
    }
    --count;
    const int v = a[rng.below(k)];
    const int dir = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * d)));
    const int from = ibp.site(v);
    const int to = t.shift(from, dir / 2, dir % 2 == 0 ? 1 : -1);
    int other = -1;
    for (int w : a)
      if (w != v && ibp.site(w) == to) other = w;
    if (other >= 0) {
      if (rng.uniform() < 0.5) continue;
      ibp.set_site(other, from);
    }
    ibp.set_site(v, to);
  }
}

}  // namespace

CouplingOutcome couple_bep_ibp(const Torus& t, const std::vector<int>& E, const Decomposition& dec, double T,
                               std::uint64_t seed, std::size_t max_alive) {
  if (dec.shape().d != t.d()) fail(ErrorCode::InvalidArgument, "decomposition dimension differs from torus");
  t.require_model_radius(dec.shape().m);
  for (std::size_t i = 0; i < E.size(); ++i) {
    if (E[i] < 0 || E[i] >= t.N()) fail(ErrorCode::InvalidArgument, "site outside the torus");
    for (std::size_t j = 0; j < i; ++j)
      if (E[i] == E[j]) fail(ErrorCode::InvalidArgument, "E must not repeat a site");
  }
  RestrictionCache cache(dec);
  PivotalIbp ibp(dec, cache, &t, max_alive);
  ibp.reset(E);
  Rng rng(derive_seed(seed, kCouplingStream, 0));
  const double lambda = dec.lambda_total();
  const double move_rate = 2.0 * t.d() * static_cast<double>(t.L()) * t.L();
  const int m = dec.shape().m;
  CouplingOutcome out;
  out.max_pivotal = static_cast<int>(E.size());
  double now = 0.0;
  while (true) {
    const std::size_t k = ibp.alive().size();
    if (k == 0) {
      out.extinction_time = now;
      break;
    }
    const double next = std::min(T, now + rng.exponential(lambda * static_cast<double>(k)));
    if (k >= 2) {
      const std::uint64_t moves = rng.poisson(move_rate * static_cast<double>(k) * (next - now));
      move_particles(t, ibp, moves, rng);
      out.moves += moves;
    }
    now = next;
    if (now >= T) break;
    const int v = ibp.alive()[rng.below(k)];
    for (int w : ibp.alive())
      if (w != v && t.distance(ibp.site(w), ibp.site(v)) <= m) {
        out.success = false;
        out.interaction_time = now;
      }
    if (!out.success) break;
    ibp.ring(v, static_cast<int>(rng.categorical(dec.weights().data(), dec.weights().size(), lambda)));
    out.max_pivotal = std::max(out.max_pivotal, static_cast<int>(ibp.alive().size()));
  }
  out.root_spins = ibp.root_values();
  return out;
}

}  // namespace gex
