#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gex/lattice.hpp"

namespace gex {

constexpr int kMaxBallSize = 20;

// Decode a table code into +-1 spins in canonical ball order.
std::vector<int> code_to_spins(std::uint32_t code, int n);
std::uint32_t spins_to_code(const std::vector<int>& spins);

// The flip rate c on {-1,1}^{B(0,m)}, indexed by window code.
class LocalRateTable {
 public:
  LocalRateTable(int d, int m, std::vector<double> rates);

  static LocalRateTable from_function(int d, int m,
                                      const std::function<double(const std::vector<int>&)>& c);

  int d() const { return shape_.d; }
  int m() const { return shape_.m; }
  const BallShape& shape() const { return shape_; }
  int n() const { return shape_.size(); }
  std::uint32_t size() const { return static_cast<std::uint32_t>(rates_.size()); }
  int center() const { return shape_.center; }
  double operator[](std::uint32_t code) const { return rates_[code]; }
  const std::vector<double>& rates() const { return rates_; }
  std::uint32_t all_plus_code() const { return size() - 1; }

 private:
  BallShape shape_;
  std::vector<double> rates_;
};

// A +-1 valued function on {-1,1}^n stored as a truth table.
class BooleanUpdate {
 public:
  BooleanUpdate() = default;
  BooleanUpdate(int n, std::vector<std::int8_t> table);

  static BooleanUpdate constant(int n, int value);

  int n() const { return n_; }
  int operator()(std::uint32_t code) const { return table_[code]; }
  const std::vector<std::int8_t>& table() const { return table_; }

  bool is_increasing() const;
  // Constant value if the function is constant, nullopt otherwise.
  std::optional<int> constant_value() const;

  // Bit j set iff coordinate j is pivotal for some assignment.
  std::uint32_t pivotal_mask() const;

  // Pivotal coordinates of the restriction that fixes the coordinates in
  // fixed_mask to the bits of fixed_values (bit set = +1). Only coordinates
  // outside fixed_mask can appear in the result.
  std::uint32_t restricted_pivotal_mask(std::uint32_t fixed_mask, std::uint32_t fixed_values) const;

  // For increasing f: the restriction is constant iff its values at the
  // all-minus and all-plus completions agree.
  std::optional<int> restricted_constant(std::uint32_t fixed_mask, std::uint32_t fixed_values) const;

 private:
  int n_ = 0;
  std::vector<std::int8_t> table_;
};

struct DecompositionEntry {
  double lambda;
  BooleanUpdate f;
};

// c(x) = sum_i lambda_i 1{f_i(x) = -x(0)} with f_1 = +1, f_2 = -1.
class Decomposition {
 public:
  Decomposition(BallShape shape, std::vector<DecompositionEntry> entries);

  const BallShape& shape() const { return shape_; }
  int n() const { return shape_.size(); }
  int q() const { return static_cast<int>(entries_.size()); }
  const std::vector<DecompositionEntry>& entries() const { return entries_; }
  const DecompositionEntry& entry(int i) const { return entries_[static_cast<std::size_t>(i)]; }
  double lambda_total() const { return lambda_; }
  double rho_bar() const { return rho_bar_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  BallShape shape_;
  std::vector<DecompositionEntry> entries_;
  std::vector<double> weights_;
  double lambda_ = 0.0;
  double rho_bar_ = 0.0;
};

// A pair of codes differing in one non-center coordinate that violates the
// required monotonicity of c.
struct AttractivenessViolation {
  std::uint32_t lower;
  std::uint32_t upper;
  int coordinate;
};

std::vector<AttractivenessViolation> check_attractive(const LocalRateTable& c);

Decomposition decompose(const LocalRateTable& c);
LocalRateTable recompose(const Decomposition& dec);

class ReactionPolynomial {
 public:
  explicit ReactionPolynomial(std::vector<double> coeffs);

  // coeffs()[k] multiplies rho^k.
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::vector<double>& derivative_coeffs() const { return deriv_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double operator()(double rho) const;
  double derivative(double rho) const;
  // max over [-1,1] of |R'|, bounded by the sum of |coefficients| of R'.
  double derivative_bound() const;

 private:
  std::vector<double> coeffs_;
  std::vector<double> deriv_;
};

ReactionPolynomial reaction_polynomial(const LocalRateTable& c);

struct ReactionValue {
  double value;
  double derivative;
};
ReactionValue reaction_via_decomposition(const Decomposition& dec, double rho);

enum class Regime { High, Critical, Low };
const char* to_string(Regime r);

struct RegimeRoot {
  double rho;
  bool tangential;
};

struct RegimeReport {
  std::vector<RegimeRoot> roots;
  Regime regime;
  // R'(rho*) when the root is unique, NaN otherwise.
  double slope;
};

RegimeReport classify_regime(const ReactionPolynomial& p, double tol = 1e-9);

// Real roots of a polynomial in [a,b]: sign-change roots by bisection on
// derivative-separated monotone pieces, plus critical points where |p| <= tol.
std::vector<RegimeRoot> real_roots(const std::vector<double>& coeffs, double a, double b, double tol);

LocalRateTable builtin_demasi(double gamma);
LocalRateTable builtin_theta(double theta);
LocalRateTable builtin_constant(int m, int d, double value = 1.0);

// The explicit five-function decomposition of the De Masi rates:
// lambda = (1-g)^2, (1-g)^2, 4g^2, 2(g-g^2), 2(g-g^2) with updates
// +1, -1, sgn(x(-1)+x(0)+x(1)), x(-1), x(1). Zero-weight entries are dropped.
Decomposition demasi_explicit_decomposition(double gamma);

// A rate table together with the decomposition that drives simulations.
struct Model {
  std::string name;
  LocalRateTable rates;
  Decomposition dec;
};

Model make_model(std::string name, const LocalRateTable& rates);
Model make_model(std::string name, const LocalRateTable& rates, Decomposition dec);

}  // namespace gex
