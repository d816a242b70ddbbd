#include "gex/dual.hpp"

#include <algorithm>
#include <functional>
#include <ostream>
#include <string>

#include "gex/error.hpp"

namespace gex {

namespace {
constexpr std::uint64_t kIbpStream = 0x696270ULL;  // "ibp"
constexpr std::uint64_t kBepStream = 0x626570ULL;  // "bep"
}  // namespace

ParticleLabel ParticleLabel::child(int k) const {
  ParticleLabel c = *this;
  c.path.push_back(static_cast<std::uint8_t>(k));
  return c;
}

bool ParticleLabel::is_descendant_of(const ParticleLabel& other) const {
  if (root != other.root || path.size() <= other.path.size()) return false;
  return std::equal(other.path.begin(), other.path.end(), path.begin());
}

std::strong_ordering ParticleLabel::operator<=>(const ParticleLabel& other) const {
  if (auto c = root <=> other.root; c != 0) return c;
  return std::lexicographical_compare_three_way(path.begin(), path.end(), other.path.begin(), other.path.end());
}

std::vector<int> IbpTree::leaves() const {
  std::vector<int> out;
  for (int v = 0; v < static_cast<int>(nodes.size()); ++v)
    if (alive_at(v, horizon)) out.push_back(v);
  return out;
}

ParticleLabel IbpTree::label(int node) const {
  std::vector<std::uint8_t> rev;
  int v = node;
  while (nodes[static_cast<std::size_t>(v)].parent >= 0) {
    rev.push_back(static_cast<std::uint8_t>(nodes[static_cast<std::size_t>(v)].slot));
    v = nodes[static_cast<std::size_t>(v)].parent;
  }
  const auto r = std::find(roots.begin(), roots.end(), v) - roots.begin();
  ParticleLabel out = root_labels[static_cast<std::size_t>(r)];
  out.path.insert(out.path.end(), rev.rbegin(), rev.rend());
  return out;
}

IbpTree run_ibp(const std::vector<ParticleLabel>& roots, const Decomposition& dec, double T, std::uint64_t seed,
                std::size_t max_alive) {
  if (!(T >= 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be nonnegative");
  for (std::size_t a = 0; a < roots.size(); ++a)
    for (std::size_t b = 0; b < roots.size(); ++b)
      if (a != b && (roots[a] == roots[b] || roots[a].is_descendant_of(roots[b])))
        fail(ErrorCode::InvalidArgument, "IBP roots must not descend from one another");
  Rng rng(derive_seed(seed, kIbpStream, 0));
  const int n = dec.n();
  IbpTree tree;
  tree.horizon = T;
  tree.ball_size = n;
  tree.root_labels = roots;
  for (std::size_t r = 0; r < roots.size(); ++r) {
    tree.roots.push_back(static_cast<int>(tree.nodes.size()));
    tree.nodes.push_back(IbpNode{});
  }
  std::size_t frontier = tree.nodes.size();
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const double death = tree.nodes[v].birth + rng.exponential(dec.lambda_total());
    if (death >= T) continue;
    const int type = static_cast<int>(rng.categorical(dec.weights().data(), dec.weights().size(), dec.lambda_total()));
    frontier += static_cast<std::size_t>(n) - 1;
    if (frontier > max_alive) fail(ErrorCode::TreeSizeExplosion, "IBP exceeded the alive-particle cap");
    IbpNode& node = tree.nodes[v];
    node.death = death;
    node.type = type;
    node.first_child = static_cast<int>(tree.nodes.size());
    for (int k = 0; k < n; ++k) {
      IbpNode c;
      c.parent = static_cast<int>(v);
      c.slot = k;
      c.birth = death;
      tree.nodes.push_back(c);
    }
  }
  return tree;
}

std::vector<int> spins_atop(const IbpTree& tree, const Decomposition& dec, const std::vector<int>& leaf_spins) {
  const std::vector<int> leaves = tree.leaves();
  if (leaf_spins.size() != leaves.size()) fail(ErrorCode::MissingLeafSpin, "one spin per alive leaf is required");
  std::vector<int> spin(tree.nodes.size(), 0);
  for (std::size_t k = 0; k < leaves.size(); ++k) spin[static_cast<std::size_t>(leaves[k])] = leaf_spins[k];
  for (std::size_t v = tree.nodes.size(); v-- > 0;) {
    const IbpNode& node = tree.nodes[v];
    if (node.first_child < 0) continue;
    std::uint32_t code = 0;
    for (int k = 0; k < tree.ball_size; ++k)
      if (spin[static_cast<std::size_t>(node.first_child + k)] > 0) code |= 1u << k;
    spin[v] = dec.entry(node.type).f(code);
  }
  std::vector<int> out;
  for (int r : tree.roots) out.push_back(spin[static_cast<std::size_t>(r)]);
  return out;
}

PivotalSet pivotal_ibp(const IbpTree& tree, const Decomposition& dec, double t) {
  if (t > tree.horizon) fail(ErrorCode::HorizonExceeded, "query time beyond the tree horizon");
  const int n = tree.ball_size;
  // cval: +-1 constant report, 0 non-constant; only for nodes born by t.
  std::vector<std::int8_t> cval(tree.nodes.size(), 0);
  std::vector<std::uint32_t> piv(tree.nodes.size(), 0);
  for (std::size_t v = tree.nodes.size(); v-- > 0;) {
    const IbpNode& node = tree.nodes[v];
    if (node.birth > t || node.death > t) continue;
    std::uint32_t fixed = 0, values = 0;
    for (int k = 0; k < n; ++k) {
      const std::int8_t c = cval[static_cast<std::size_t>(node.first_child + k)];
      if (c != 0) {
        fixed |= 1u << k;
        if (c > 0) values |= 1u << k;
      }
    }
    const BooleanUpdate& f = dec.entry(node.type).f;
    if (auto c = f.restricted_constant(fixed, values)) {
      cval[v] = static_cast<std::int8_t>(*c);
    } else {
      piv[v] = f.restricted_pivotal_mask(fixed, values);
    }
  }
  PivotalSet out;
  out.exact = true;
  std::vector<int> stack;
  for (int r : tree.roots)
    if (cval[static_cast<std::size_t>(r)] == 0) stack.push_back(r);
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (tree.alive_at(v, t)) {
      out.members.push_back(v);
      continue;
    }
    const IbpNode& node = tree.nodes[static_cast<std::size_t>(v)];
    for (int k = 0; k < n; ++k)
      if (piv[static_cast<std::size_t>(v)] >> k & 1u) stack.push_back(node.first_child + k);
  }
  std::sort(out.members.begin(), out.members.end());
  return out;
}

int BepGroup::site_at(double t) const {
  int site = trajectory.front().second;
  for (const auto& [time, s] : trajectory) {
    if (time > t) break;
    site = s;
  }
  return site;
}

std::vector<int> BepHistory::leaves() const {
  std::vector<int> out;
  for (int g = 0; g < static_cast<int>(groups.size()); ++g)
    if (alive_at(g, horizon)) out.push_back(g);
  return out;
}

namespace {

// Shared bookkeeping of run_bep and history_from_marks.
class BepBuilder {
 public:
  BepBuilder(const Torus& t, const std::vector<int>& E, int m, double horizon, std::size_t max_groups)
      : torus_(t), balls_(t.ball_table(m)), ball_size_(make_ball_shape(t.d(), m).size()), max_groups_(max_groups),
        occ_(static_cast<std::size_t>(t.N()), -1) {
    t.require_model_radius(m);
    hist_.horizon = horizon;
    hist_.d = t.d();
    hist_.L = t.L();
    hist_.sites = E;
    for (int u : E) {
      if (u < 0 || u >= t.N()) fail(ErrorCode::InvalidArgument, "site outside the torus");
      if (occ_[static_cast<std::size_t>(u)] >= 0) fail(ErrorCode::InvalidArgument, "E must not repeat a site");
      BepGroup g;
      g.label.root = u;
      g.trajectory.push_back({0.0, u});
      hist_.roots.push_back(add_group(std::move(g), u));
    }
  }

  int occupant(int u) const { return occ_[static_cast<std::size_t>(u)]; }
  const std::vector<int>& alive() const { return alive_; }
  int site_of(int g) const { return hist_.groups[static_cast<std::size_t>(g)].trajectory.back().second; }

  // Exclusion across edge e at time s; the particles on its endpoints swap.
  void exclusion(double s, int e) {
    const int u = torus_.edge_from(e), v = torus_.edge_to(e);
    const int gu = occupant(u), gv = occupant(v);
    if (gu < 0 && gv < 0) return;
    occ_[static_cast<std::size_t>(u)] = gv;
    occ_[static_cast<std::size_t>(v)] = gu;
    if (gu >= 0) hist_.groups[static_cast<std::size_t>(gu)].trajectory.push_back({s, v});
    if (gv >= 0) hist_.groups[static_cast<std::size_t>(gv)].trajectory.push_back({s, u});
    hist_.marks.push_back(Mark{s, MarkKind::Exclusion, e, -1});
  }

  // Glauber ring of type i at site u at time s; no-op on an empty site.
  void glauber(double s, int u, int type) {
    const int g = occupant(u);
    if (g < 0) return;
    hist_.marks.push_back(Mark{s, MarkKind::Glauber, u, type});
    remove_alive(g);
    occ_[static_cast<std::size_t>(u)] = -1;
    {
      BepGroup& grp = hist_.groups[static_cast<std::size_t>(g)];
      grp.death = s;
      grp.type = type;
      grp.children.assign(static_cast<std::size_t>(ball_size_), -1);
    }
    const ParticleLabel parent_label = hist_.groups[static_cast<std::size_t>(g)].label;
    for (int k = 0; k < ball_size_; ++k) {
      const int v = balls_[static_cast<std::size_t>(u * ball_size_ + k)];
      ParticleLabel lbl = parent_label.child(k);
      int child = occupant(v);
      if (child >= 0) {
        BepGroup& h = hist_.groups[static_cast<std::size_t>(child)];
        if (lbl < h.label) h.label = std::move(lbl);
      } else {
        BepGroup c;
        c.label = std::move(lbl);
        c.birth = s;
        c.trajectory.push_back({s, v});
        child = add_group(std::move(c), v);
      }
      hist_.groups[static_cast<std::size_t>(g)].children[static_cast<std::size_t>(k)] = child;
    }
  }

  BepHistory finish() { return std::move(hist_); }

 private:
  int add_group(BepGroup g, int site) {
    if (hist_.groups.size() >= max_groups_) fail(ErrorCode::TreeSizeExplosion, "BEP exceeded the group cap");
    const int id = static_cast<int>(hist_.groups.size());
    hist_.groups.push_back(std::move(g));
    occ_[static_cast<std::size_t>(site)] = id;
    pos_.push_back(static_cast<int>(alive_.size()));
    alive_.push_back(id);
    return id;
  }
  void remove_alive(int g) {
    const int p = pos_[static_cast<std::size_t>(g)];
    const int last = alive_.back();
    alive_[static_cast<std::size_t>(p)] = last;
    pos_[static_cast<std::size_t>(last)] = p;
    alive_.pop_back();
    pos_[static_cast<std::size_t>(g)] = -1;
  }

  const Torus& torus_;
  std::vector<int> balls_;
  int ball_size_;
  std::size_t max_groups_;
  std::vector<int> occ_;
  std::vector<int> alive_;
  std::vector<int> pos_;
  BepHistory hist_;
};

// Edge joining u to its neighbor in direction dir (0: +x, 1: -x, 2: +y, 3: -y).
int edge_towards(const Torus& t, int u, int dir) {
  const int axis = dir / 2;
  const int from = dir % 2 == 0 ? u : t.shift(u, axis, -1);
  return axis * t.N() + from;
}

}  // namespace

BepHistory run_bep(const Torus& t, const std::vector<int>& E, const Decomposition& dec, double T, std::uint64_t seed,
                   std::size_t max_groups) {
  if (!(T >= 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be nonnegative");
  if (dec.shape().d != t.d()) fail(ErrorCode::InvalidArgument, "decomposition dimension differs from torus");
  BepBuilder b(t, E, dec.shape().m, T, max_groups);
  Rng rng(derive_seed(seed, kBepStream, 0));
  const double L2 = static_cast<double>(t.L()) * t.L();
  const double move_rate = 2.0 * t.d() * L2;  // proposals per group
  const double lambda = dec.lambda_total();
  double now = 0.0;
  while (!b.alive().empty()) {
    const double k = static_cast<double>(b.alive().size());
    const double total = k * (move_rate + lambda);
    now += rng.exponential(total);
    if (now >= T) break;
    const int g = b.alive()[rng.below(b.alive().size())];
    const int u = b.site_of(g);
    if (rng.uniform() * (move_rate + lambda) < move_rate) {
      // Each edge rings at L^2; an edge between two groups is proposed by
      // both, so it is accepted with probability 1/2.
      const int dir = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * t.d())));
      const int e = edge_towards(t, u, dir);
      const int v = t.edge_from(e) == u ? t.edge_to(e) : t.edge_from(e);
      if (b.occupant(v) >= 0 && rng.uniform() < 0.5) continue;
      b.exclusion(now, e);
    } else {
      const int type = static_cast<int>(rng.categorical(dec.weights().data(), dec.weights().size(), lambda));
      b.glauber(now, u, type);
    }
  }
  return b.finish();
}

BepHistory history_from_marks(const Torus& t, const std::vector<int>& E, const MarkStream& ms, int m, double time,
                              std::size_t max_groups) {
  if (ms.construction != Construction::GC1) fail(ErrorCode::ConstructionMismatch, "update histories read GC1 streams");
  if (ms.d != t.d() || ms.L != t.L()) fail(ErrorCode::InvalidArgument, "stream was generated on another torus");
  if (time > ms.horizon) fail(ErrorCode::HorizonExceeded, "history time beyond the stream horizon");
  BepBuilder b(t, E, m, time, max_groups);
  auto end = std::upper_bound(ms.marks.begin(), ms.marks.end(), time,
                              [](double v, const Mark& mk) { return v < mk.time; });
  for (auto it = end; it != ms.marks.begin();) {
    --it;
    const double s = time - it->time;
    if (it->kind == MarkKind::Exclusion)
      b.exclusion(s, it->location);
    else
      b.glauber(s, it->location, it->type);
  }
  return b.finish();
}

namespace {

// Constant report per group at time t (+-1 constant, 0 otherwise) and the
// restricted pivotal mask of every non-constant internal group.
struct BepReports {
  std::vector<std::int8_t> cval;
  std::vector<std::uint32_t> piv;
};

BepReports bep_reports(const BepHistory& hist, const Decomposition& dec, double t) {
  const std::size_t G = hist.groups.size();
  BepReports r{std::vector<std::int8_t>(G, 0), std::vector<std::uint32_t>(G, 0)};
  std::vector<std::uint8_t> done(G, 0);
  // Children die strictly later than their parent rings, so processing in
  // decreasing death time visits children first.
  std::vector<int> order;
  for (int g = 0; g < static_cast<int>(G); ++g)
    if (hist.groups[static_cast<std::size_t>(g)].birth <= t && hist.groups[static_cast<std::size_t>(g)].death <= t)
      order.push_back(g);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return hist.groups[static_cast<std::size_t>(a)].death > hist.groups[static_cast<std::size_t>(b)].death;
  });
  for (int g : order) {
    const BepGroup& grp = hist.groups[static_cast<std::size_t>(g)];
    std::uint32_t fixed = 0, values = 0;
    for (std::size_t k = 0; k < grp.children.size(); ++k) {
      const std::int8_t c = r.cval[static_cast<std::size_t>(grp.children[k])];
      if (c != 0) {
        fixed |= 1u << k;
        if (c > 0) values |= 1u << k;
      }
    }
    const BooleanUpdate& f = dec.entry(grp.type).f;
    if (auto c = f.restricted_constant(fixed, values))
      r.cval[static_cast<std::size_t>(g)] = static_cast<std::int8_t>(*c);
    else
      r.piv[static_cast<std::size_t>(g)] = f.restricted_pivotal_mask(fixed, values);
  }
  return r;
}

}  // namespace

std::vector<int> spins_atop(const BepHistory& hist, const Decomposition& dec, const std::vector<int>& leaf_spins) {
  const std::vector<int> leaves = hist.leaves();
  if (leaf_spins.size() != leaves.size()) fail(ErrorCode::MissingLeafSpin, "one spin per alive group is required");
  std::vector<int> spin(hist.groups.size(), 0);
  for (std::size_t k = 0; k < leaves.size(); ++k) spin[static_cast<std::size_t>(leaves[k])] = leaf_spins[k];
  std::vector<int> order;
  for (int g = 0; g < static_cast<int>(hist.groups.size()); ++g)
    if (hist.groups[static_cast<std::size_t>(g)].death <= hist.horizon) order.push_back(g);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return hist.groups[static_cast<std::size_t>(a)].death > hist.groups[static_cast<std::size_t>(b)].death;
  });
  for (int g : order) {
    const BepGroup& grp = hist.groups[static_cast<std::size_t>(g)];
    std::uint32_t code = 0;
    for (std::size_t k = 0; k < grp.children.size(); ++k)
      if (spin[static_cast<std::size_t>(grp.children[k])] > 0) code |= 1u << k;
    spin[static_cast<std::size_t>(g)] = dec.entry(grp.type).f(code);
  }
  std::vector<int> out;
  for (int r : hist.roots) out.push_back(spin[static_cast<std::size_t>(r)]);
  return out;
}

PivotalSet pivotal_bep_superset(const BepHistory& hist, const Decomposition& dec, double t) {
  if (t > hist.horizon) fail(ErrorCode::HorizonExceeded, "query time beyond the history horizon");
  const BepReports r = bep_reports(hist, dec, t);
  PivotalSet out;
  out.exact = false;
  std::vector<std::uint8_t> seen(hist.groups.size(), 0);
  std::vector<int> stack;
  for (int g : hist.roots)
    if (r.cval[static_cast<std::size_t>(g)] == 0) stack.push_back(g);
  while (!stack.empty()) {
    const int g = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(g)]) continue;
    seen[static_cast<std::size_t>(g)] = 1;
    if (hist.alive_at(g, t)) {
      out.members.push_back(g);
      continue;
    }
    const BepGroup& grp = hist.groups[static_cast<std::size_t>(g)];
    for (std::size_t k = 0; k < grp.children.size(); ++k)
      if (r.piv[static_cast<std::size_t>(g)] >> k & 1u) stack.push_back(grp.children[k]);
  }
  std::sort(out.members.begin(), out.members.end());
  return out;
}

int sample_spin_atop(const Decomposition& dec, double t, double rho0, Rng& rng) {
  const int n = dec.n();
  const double lambda = dec.lambda_total();
  std::function<int(double)> spin = [&](double remaining) -> int {
    const double s = rng.exponential(lambda);
    if (s >= remaining) return rng.rademacher(rho0);
    const int type = static_cast<int>(rng.categorical(dec.weights().data(), dec.weights().size(), lambda));
    const BooleanUpdate& f = dec.entry(type).f;
    if (auto c = f.constant_value()) return *c;
    std::uint32_t fixed = 0, values = 0;
    for (int k = 0; k < n; ++k) {
      fixed |= 1u << k;
      if (spin(remaining - s) > 0) values |= 1u << k;
      if (auto c = f.restricted_constant(fixed, values)) return *c;
    }
    return f(values);
  };
  return spin(t);
}

namespace {
void write_label(std::ostream& os, const ParticleLabel& l) {
  os << l.root;
  for (auto k : l.path) os << '.' << static_cast<int>(k);
}
}  // namespace

void write_tree(std::ostream& os, const IbpTree& tree) {
  os << "# label birth death type\n";
  for (int v = 0; v < static_cast<int>(tree.nodes.size()); ++v) {
    const IbpNode& node = tree.nodes[static_cast<std::size_t>(v)];
    write_label(os, tree.label(v));
    os << ' ' << node.birth << ' ';
    if (node.death == kNever) os << "inf"; else os << node.death;
    os << ' ' << node.type << '\n';
  }
}

void write_history(std::ostream& os, const BepHistory& hist) {
  os << "# label birth death type sites(time:site,...)\n";
  for (const BepGroup& g : hist.groups) {
    write_label(os, g.label);
    os << ' ' << g.birth << ' ';
    if (g.death == kNever) os << "inf"; else os << g.death;
    os << ' ' << g.type << ' ';
    for (std::size_t k = 0; k < g.trajectory.size(); ++k)
      os << (k ? "," : "") << g.trajectory[k].first << ':' << g.trajectory[k].second;
    os << '\n';
  }
}

}  // namespace gex
