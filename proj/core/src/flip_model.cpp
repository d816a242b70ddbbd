#include "gex/flip_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "gex/error.hpp"

namespace gex {

std::vector<int> code_to_spins(std::uint32_t code, int n) {
  std::vector<int> s(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = (code >> k) & 1u ? 1 : -1;
  return s;
}

std::uint32_t spins_to_code(const std::vector<int>& spins) {
  std::uint32_t code = 0;
  for (std::size_t k = 0; k < spins.size(); ++k)
    if (spins[k] > 0) code |= 1u << k;
  return code;
}

// ---------------------------------------------------------------- rate table

LocalRateTable::LocalRateTable(int d, int m, std::vector<double> rates)
    : shape_(make_ball_shape(d, m)), rates_(std::move(rates)) {
  if (shape_.size() > kMaxBallSize)
    fail(ErrorCode::BallTooLarge, "|B(0,m)| = " + std::to_string(shape_.size()) + " exceeds 20");
  if (rates_.size() != (std::size_t{1} << shape_.size()))
    fail(ErrorCode::InvalidArgument, "rate table must have 2^|B(0,m)| entries");
  for (double r : rates_)
    if (!(r >= 0.0) || !std::isfinite(r)) fail(ErrorCode::InvalidArgument, "rates must be finite and nonnegative");
}

LocalRateTable LocalRateTable::from_function(int d, int m,
                                             const std::function<double(const std::vector<int>&)>& c) {
  const BallShape shape = make_ball_shape(d, m);
  if (shape.size() > kMaxBallSize) fail(ErrorCode::BallTooLarge, "|B(0,m)| exceeds 20");
  const std::uint32_t size = 1u << shape.size();
  std::vector<double> rates(size);
  for (std::uint32_t code = 0; code < size; ++code) rates[code] = c(code_to_spins(code, shape.size()));
  return LocalRateTable(d, m, std::move(rates));
}

// ------------------------------------------------------------ boolean update

BooleanUpdate::BooleanUpdate(int n, std::vector<std::int8_t> table) : n_(n), table_(std::move(table)) {
  if (n < 0 || n > kMaxBallSize) fail(ErrorCode::BallTooLarge, "boolean function arity out of range");
  if (table_.size() != (std::size_t{1} << n)) fail(ErrorCode::InvalidArgument, "truth table size mismatch");
  for (auto v : table_)
    if (v != 1 && v != -1) fail(ErrorCode::InvalidArgument, "boolean values are +-1");
}

BooleanUpdate BooleanUpdate::constant(int n, int value) {
  return BooleanUpdate(n, std::vector<std::int8_t>(std::size_t{1} << n, static_cast<std::int8_t>(value)));
}

bool BooleanUpdate::is_increasing() const {
  const std::uint32_t size = static_cast<std::uint32_t>(table_.size());
  for (std::uint32_t code = 0; code < size; ++code)
    for (int j = 0; j < n_; ++j)
      if (!((code >> j) & 1u) && table_[code] > table_[code | (1u << j)]) return false;
  return true;
}

std::optional<int> BooleanUpdate::constant_value() const {
  for (auto v : table_)
    if (v != table_[0]) return std::nullopt;
  return table_[0];
}

std::uint32_t BooleanUpdate::pivotal_mask() const { return restricted_pivotal_mask(0, 0); }

std::uint32_t BooleanUpdate::restricted_pivotal_mask(std::uint32_t fixed_mask, std::uint32_t fixed_values) const {
  const std::uint32_t full = (n_ == 32) ? ~0u : ((1u << n_) - 1u);
  const std::uint32_t free = full & ~fixed_mask;
  const std::uint32_t base = fixed_values & fixed_mask;
  std::uint32_t result = 0;
  // Enumerate subsets of the free coordinates.
  std::uint32_t sub = 0;
  while (true) {
    const std::uint32_t code = base | sub;
    for (int j = 0; j < n_; ++j) {
      const std::uint32_t bit = 1u << j;
      if ((free & bit) && !(code & bit) && !(result & bit) && table_[code] != table_[code | bit]) result |= bit;
    }
    if (sub == free) break;
    sub = (sub - free) & free;
  }
  return result;
}

std::optional<int> BooleanUpdate::restricted_constant(std::uint32_t fixed_mask, std::uint32_t fixed_values) const {
  const std::uint32_t full = (1u << n_) - 1u;
  const std::uint32_t base = fixed_values & fixed_mask;
  const int lo = table_[base];
  const int hi = table_[base | (full & ~fixed_mask)];
  if (lo == hi) return lo;
  return std::nullopt;
}

// -------------------------------------------------------------- decomposition

Decomposition::Decomposition(BallShape shape, std::vector<DecompositionEntry> entries)
    : shape_(std::move(shape)), entries_(std::move(entries)) {
  if (entries_.size() < 2) fail(ErrorCode::InvalidArgument, "a decomposition has at least the two oblivious entries");
  for (const auto& e : entries_) {
    if (e.f.n() != shape_.size()) fail(ErrorCode::InvalidArgument, "update arity differs from |B(0,m)|");
    if (!(e.lambda > 0.0)) fail(ErrorCode::InvalidArgument, "decomposition weights must be positive");
    if (!e.f.is_increasing()) fail(ErrorCode::SupportIndicatorNotMonotone, "update function is not increasing");
  }
  if (entries_[0].f.constant_value() != std::optional<int>(1))
    fail(ErrorCode::InvalidArgument, "f_1 must be the constant +1");
  if (entries_[1].f.constant_value() != std::optional<int>(-1))
    fail(ErrorCode::InvalidArgument, "f_2 must be the constant -1");
  for (const auto& e : entries_) {
    lambda_ += e.lambda;
    weights_.push_back(e.lambda);
  }
  rho_bar_ = (entries_[0].lambda - entries_[1].lambda) / (entries_[0].lambda + entries_[1].lambda);
}

std::vector<AttractivenessViolation> check_attractive(const LocalRateTable& c) {
  std::vector<AttractivenessViolation> out;
  const int n = c.n();
  const std::uint32_t center_bit = 1u << c.center();
  for (std::uint32_t code = 0; code < c.size(); ++code) {
    const bool center_plus = code & center_bit;
    for (int j = 0; j < n; ++j) {
      const std::uint32_t bit = 1u << j;
      if (bit == center_bit || (code & bit)) continue;
      const double lo = c[code];
      const double hi = c[code | bit];
      // Center +1: c decreasing in the others; center -1: increasing.
      if (center_plus ? (lo < hi) : (lo > hi)) out.push_back({code, code | bit, j});
    }
  }
  return out;
}

namespace {

// Greedy layer peeling of a nonnegative function h that is monotone in the
// given direction: at each step subtract (min over the support) times the
// support indicator. Returns (lambda, indicator) pairs.
std::vector<std::pair<double, std::vector<std::uint8_t>>> peel_layers(std::vector<double> h, int n, bool increasing,
                                                                      double zero_tol) {
  std::vector<std::pair<double, std::vector<std::uint8_t>>> layers;
  const std::uint32_t size = static_cast<std::uint32_t>(h.size());
  while (true) {
    double lam = std::numeric_limits<double>::infinity();
    for (double v : h)
      if (v > zero_tol) lam = std::min(lam, v);
    if (!std::isfinite(lam)) break;
    std::vector<std::uint8_t> ind(size);
    for (std::uint32_t k = 0; k < size; ++k) ind[k] = h[k] > zero_tol ? 1 : 0;
    for (std::uint32_t k = 0; k < size; ++k)
      for (int j = 0; j < n; ++j) {
        const std::uint32_t bit = 1u << j;
        if (k & bit) continue;
        const bool ok = increasing ? ind[k] <= ind[k | bit] : ind[k] >= ind[k | bit];
        if (!ok) fail(ErrorCode::SupportIndicatorNotMonotone, "support of a peeled layer is not monotone");
      }
    for (std::uint32_t k = 0; k < size; ++k) {
      if (!ind[k]) continue;
      h[k] -= lam;
      if (h[k] <= zero_tol) h[k] = 0.0;
    }
    layers.emplace_back(lam, std::move(ind));
  }
  return layers;
}

// Insert the center bit at position `center` into a code over the n-1 others.
std::uint32_t insert_center(std::uint32_t rest, int center, bool plus) {
  const std::uint32_t low = rest & ((1u << center) - 1u);
  const std::uint32_t high = (rest >> center) << (center + 1);
  return low | high | (plus ? (1u << center) : 0u);
}

}  // namespace

Decomposition decompose(const LocalRateTable& c) {
  if (!check_attractive(c).empty()) fail(ErrorCode::NotAttractive, "flip rates violate attractiveness");
  for (double r : c.rates())
    if (!(r > 0.0)) fail(ErrorCode::ParameterOutOfRange, "decomposition requires strictly positive rates");
  const int n = c.n();
  const int others = n - 1;
  const int center = c.center();
  const std::uint32_t rest_size = 1u << others;
  double scale = 0.0;
  for (double r : c.rates()) scale = std::max(scale, r);
  const double zero_tol = 1e-14 * scale;

  std::vector<double> minus_part(rest_size), plus_part(rest_size);
  for (std::uint32_t r = 0; r < rest_size; ++r) {
    minus_part[r] = c[insert_center(r, center, false)];
    plus_part[r] = c[insert_center(r, center, true)];
  }
  const auto minus_layers = peel_layers(minus_part, others, true, zero_tol);
  const auto plus_layers = peel_layers(plus_part, others, false, zero_tol);

  auto lift_minus = [&](const std::vector<std::uint8_t>& ind) {
    std::vector<std::int8_t> t(std::size_t{1} << n);
    for (std::uint32_t r = 0; r < rest_size; ++r) {
      t[insert_center(r, center, true)] = 1;
      t[insert_center(r, center, false)] = static_cast<std::int8_t>(2 * ind[r] - 1);
    }
    return BooleanUpdate(n, std::move(t));
  };
  auto lift_plus = [&](const std::vector<std::uint8_t>& ind) {
    std::vector<std::int8_t> t(std::size_t{1} << n);
    for (std::uint32_t r = 0; r < rest_size; ++r) {
      t[insert_center(r, center, true)] = static_cast<std::int8_t>(1 - 2 * ind[r]);
      t[insert_center(r, center, false)] = -1;
    }
    return BooleanUpdate(n, std::move(t));
  };

  // First layers are full supports since c > 0; they lift to the constants.
  std::vector<DecompositionEntry> entries;
  entries.push_back({minus_layers.front().first, lift_minus(minus_layers.front().second)});
  entries.push_back({plus_layers.front().first, lift_plus(plus_layers.front().second)});
  for (std::size_t k = 1; k < minus_layers.size(); ++k)
    entries.push_back({minus_layers[k].first, lift_minus(minus_layers[k].second)});
  for (std::size_t k = 1; k < plus_layers.size(); ++k)
    entries.push_back({plus_layers[k].first, lift_plus(plus_layers[k].second)});
  return Decomposition(c.shape(), std::move(entries));
}

LocalRateTable recompose(const Decomposition& dec) {
  const int n = dec.n();
  const std::uint32_t size = 1u << n;
  const std::uint32_t center_bit = 1u << dec.shape().center;
  std::vector<double> rates(size, 0.0);
  for (std::uint32_t code = 0; code < size; ++code) {
    const int x0 = (code & center_bit) ? 1 : -1;
    for (const auto& e : dec.entries())
      if (e.f(code) == -x0) rates[code] += e.lambda;
  }
  return LocalRateTable(dec.shape().d, dec.shape().m, std::move(rates));
}

// --------------------------------------------------------- reaction function

namespace {

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

std::vector<double> derivative_of(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

}  // namespace

ReactionPolynomial::ReactionPolynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
  deriv_ = derivative_of(coeffs_);
}

double ReactionPolynomial::operator()(double rho) const { return horner(coeffs_, rho); }
double ReactionPolynomial::derivative(double rho) const { return horner(deriv_, rho); }

double ReactionPolynomial::derivative_bound() const {
  double s = 0.0;
  for (double v : deriv_) s += std::abs(v);
  return s;
}

ReactionPolynomial reaction_polynomial(const LocalRateTable& c) {
  const int n = c.n();
  if (n > kMaxBallSize) fail(ErrorCode::BallTooLarge, "|B(0,m)| exceeds 20");
  const std::uint32_t center_bit = 1u << c.center();
  // The nu_rho weight of a vector with k plus spins is
  // ((1+rho)/2)^k ((1-rho)/2)^(n-k); group the table by k first.
  std::vector<double> by_plus_count(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::uint32_t code = 0; code < c.size(); ++code) {
    const int k = std::popcount(code);
    const double x0 = (code & center_bit) ? 1.0 : -1.0;
    by_plus_count[static_cast<std::size_t>(k)] += -2.0 * x0 * c[code];
  }
  std::vector<double> coeffs(static_cast<std::size_t>(n) + 1, 0.0);
  const std::vector<double> up = {0.5, 0.5};     // (1+rho)/2
  const std::vector<double> down = {0.5, -0.5};  // (1-rho)/2
  auto convolve = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
  };
  for (int k = 0; k <= n; ++k) {
    if (by_plus_count[static_cast<std::size_t>(k)] == 0.0) continue;
    std::vector<double> w = {1.0};
    for (int j = 0; j < k; ++j) w = convolve(w, up);
    for (int j = k; j < n; ++j) w = convolve(w, down);
    for (std::size_t p = 0; p < w.size(); ++p) coeffs[p] += by_plus_count[static_cast<std::size_t>(k)] * w[p];
  }
  return ReactionPolynomial(std::move(coeffs));
}

ReactionValue reaction_via_decomposition(const Decomposition& dec, double rho) {
  const int n = dec.n();
  const std::uint32_t size = 1u << n;
  const double p_plus = 0.5 * (1.0 + rho);
  const double p_minus = 0.5 * (1.0 - rho);
  std::vector<double> weight(size);
  for (std::uint32_t code = 0; code < size; ++code) {
    const int k = std::popcount(code);
    weight[code] = std::pow(p_plus, k) * std::pow(p_minus, n - k);
  }
  double value = 0.0;
  double deriv = 0.0;
  for (const auto& e : dec.entries()) {
    double mean = 0.0;
    double grad = 0.0;
    for (std::uint32_t code = 0; code < size; ++code) {
      mean += weight[code] * e.f(code);
      for (int j = 0; j < n; ++j) {
        const std::uint32_t bit = 1u << j;
        grad += weight[code] * 0.5 * (e.f(code | bit) - e.f(code & ~bit));
      }
    }
    value += e.lambda * mean;
    deriv += e.lambda * grad;
  }
  return {value - dec.lambda_total() * rho, deriv - dec.lambda_total()};
}

// ------------------------------------------------------------------ regimes

const char* to_string(Regime r) {
  switch (r) {
    case Regime::High: return "High";
    case Regime::Critical: return "Critical";
    case Regime::Low: return "Low";
  }
  return "Unknown";
}

namespace {

double bisect(const std::vector<double>& c, double lo, double hi) {
  double flo = horner(c, lo);
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = horner(c, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

int sign_of(double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); }

}  // namespace

std::vector<RegimeRoot> real_roots(const std::vector<double>& coeffs, double a, double b, double tol) {
  std::vector<double> c = coeffs;
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  if (c.size() <= 1) return {};
  std::vector<double> points = {a};
  if (c.size() > 2)
    for (const auto& r : real_roots(derivative_of(c), a, b, tol))
      if (r.rho > a && r.rho < b) points.push_back(r.rho);
  points.push_back(b);

  std::vector<RegimeRoot> roots;
  auto add = [&](double x, bool tangential) {
    for (const auto& r : roots)
      if (std::abs(r.rho - x) < 1e-7) return;
    roots.push_back({x, tangential});
  };
  // Near-zero values at the piece endpoints (critical points or a, b).
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double x = points[k];
    if (std::abs(horner(c, x)) > tol) continue;
    const double left = k > 0 ? horner(c, 0.5 * (points[k - 1] + x)) : 0.0;
    const double right = k + 1 < points.size() ? horner(c, 0.5 * (x + points[k + 1])) : 0.0;
    const bool crossing = k > 0 && k + 1 < points.size() && sign_of(left, 0.0) * sign_of(right, 0.0) < 0;
    const bool endpoint = k == 0 || k + 1 == points.size();
    add(x, !crossing && !endpoint);
  }
  // Sign changes strictly inside monotone pieces.
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double flo = horner(c, points[k]);
    const double fhi = horner(c, points[k + 1]);
    if (std::abs(flo) <= tol || std::abs(fhi) <= tol) continue;
    if ((flo < 0) != (fhi < 0)) add(bisect(c, points[k], points[k + 1]), false);
  }
  std::sort(roots.begin(), roots.end(), [](const RegimeRoot& x, const RegimeRoot& y) { return x.rho < y.rho; });
  return roots;
}

RegimeReport classify_regime(const ReactionPolynomial& p, double tol) {
  // Strict inequalities hold for positive rate tables; a zero at an endpoint
  // is a genuine boundary root (rates allowed to vanish there).
  if (p(-1.0) < 0.0 || p(1.0) > 0.0)
    fail(ErrorCode::BoundarySignViolation, "R(-1) must be >= 0 and R(1) <= 0");
  RegimeReport rep;
  rep.roots = real_roots(p.coeffs(), -1.0, 1.0, tol);
  rep.slope = std::numeric_limits<double>::quiet_NaN();
  if (rep.roots.size() == 1) {
    rep.slope = p.derivative(rep.roots.front().rho);
    if (std::abs(rep.slope) <= tol)
      rep.regime = Regime::Critical;
    else
      rep.regime = rep.slope < 0.0 ? Regime::High : Regime::Low;
  } else {
    rep.regime = Regime::Low;
  }
  return rep;
}

// ----------------------------------------------------------------- builtins

LocalRateTable builtin_demasi(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorCode::ParameterOutOfRange, "gamma must lie in [0,1]");
  return LocalRateTable::from_function(1, 1, [gamma](const std::vector<int>& x) {
    return 1.0 - gamma * x[1] * (x[2] + x[0]) + gamma * gamma * x[2] * x[0];
  });
}

LocalRateTable builtin_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) fail(ErrorCode::ParameterOutOfRange, "theta must be positive");
  return LocalRateTable::from_function(1, 1, [theta](const std::vector<int>& x) {
    return theta + ((x[1] == 1 && x[2] == -1) ? 2.0 : 0.0);
  });
}

LocalRateTable builtin_constant(int m, int d, double value) {
  if (!(value > 0.0)) fail(ErrorCode::ParameterOutOfRange, "constant rate must be positive");
  const BallShape shape = make_ball_shape(d, m);
  if (shape.size() > kMaxBallSize) fail(ErrorCode::BallTooLarge, "|B(0,m)| exceeds 20");
  return LocalRateTable(d, m, std::vector<double>(std::size_t{1} << shape.size(), value));
}

Decomposition demasi_explicit_decomposition(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorCode::ParameterOutOfRange, "gamma must lie in [0,1)");
  auto table = [](const std::function<int(const std::vector<int>&)>& f) {
    std::vector<std::int8_t> t(8);
    for (std::uint32_t code = 0; code < 8; ++code) t[code] = static_cast<std::int8_t>(f(code_to_spins(code, 3)));
    return BooleanUpdate(3, std::move(t));
  };
  const double g = gamma;
  std::vector<DecompositionEntry> entries;
  entries.push_back({(1 - g) * (1 - g), BooleanUpdate::constant(3, 1)});
  entries.push_back({(1 - g) * (1 - g), BooleanUpdate::constant(3, -1)});
  if (g > 0.0) {
    entries.push_back({4 * g * g, table([](const std::vector<int>& x) { return x[0] + x[1] + x[2] > 0 ? 1 : -1; })});
    entries.push_back({2 * (g - g * g), table([](const std::vector<int>& x) { return x[0]; })});
    entries.push_back({2 * (g - g * g), table([](const std::vector<int>& x) { return x[2]; })});
  }
  return Decomposition(make_ball_shape(1, 1), std::move(entries));
}

Model make_model(std::string name, const LocalRateTable& rates) {
  return Model{std::move(name), rates, decompose(rates)};
}

Model make_model(std::string name, const LocalRateTable& rates, Decomposition dec) {
  const LocalRateTable back = recompose(dec);
  for (std::uint32_t code = 0; code < rates.size(); ++code)
    if (std::abs(back[code] - rates[code]) > 1e-12 * std::max(1.0, rates[code]))
      fail(ErrorCode::InvalidArgument, "decomposition does not recompose to the rate table");
  return Model{std::move(name), rates, std::move(dec)};
}

}  // namespace gex
