#include "gex/hydrodynamics.hpp"

#include <algorithm>
#include <cmath>

#include "gex/error.hpp"

namespace gex {

double OdeSolution::at(double time, const ReactionPolynomial& p) const {
  if (t.empty()) return 0.0;
  if (time <= t.front()) return rho.front();
  if (time >= t.back()) return rho.back();
  const double step = t.size() > 1 ? t[1] - t[0] : 1.0;
  std::size_t k = static_cast<std::size_t>(time / step);
  if (k + 1 >= t.size()) k = t.size() - 2;
  const double s = (time - t[k]) / step;
  const double y0 = rho[k], y1 = rho[k + 1];
  const double m0 = p(y0) * step, m1 = p(y1) * step;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
}

OdeSolution solve_ode(const ReactionPolynomial& p, double rho0, double T, double h) {
  if (!(rho0 >= -1.0 && rho0 <= 1.0)) fail(ErrorCode::InvalidArgument, "rho0 must lie in [-1,1]");
  if (!(h > 0.0) || !(T >= 0.0)) fail(ErrorCode::InvalidArgument, "need h > 0 and T >= 0");
  if (h * p.derivative_bound() > 0.5) fail(ErrorCode::StepTooLarge, "h * max|R'| exceeds 0.5");
  const auto n = static_cast<std::size_t>(std::max(0.0, std::ceil(T / h - 1e-9)));
  const double step = n > 0 ? T / static_cast<double>(n) : h;
  OdeSolution sol;
  sol.h = step;
  sol.t.resize(n + 1);
  sol.rho.resize(n + 1);
  double y = rho0;
  sol.t[0] = 0.0;
  sol.rho[0] = y;
  for (std::size_t k = 1; k <= n; ++k) {
    const double k1 = p(y);
    const double k2 = p(y + 0.5 * step * k1);
    const double k3 = p(y + 0.5 * step * k2);
    const double k4 = p(y + step * k3);
    y += step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    y = std::clamp(y, -1.0, 1.0);
    sol.t[k] = static_cast<double>(k) * step;
    sol.rho[k] = y;
  }
  return sol;
}

DerivedFunctions derived_functions(const ReactionPolynomial& p, double T, double h) {
  const OdeSolution up = solve_ode(p, 1.0, T, h);
  const OdeSolution down = solve_ode(p, -1.0, T, h);
  DerivedFunctions out;
  out.t = up.t;
  out.rho_plus = up.rho;
  out.rho_minus = down.rho;
  const std::size_t n = up.t.size();
  out.phi.resize(n);
  out.theta.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.phi[k] = 0.5 * (up.rho[k] - down.rho[k]);
    if (k == 0) continue;
    const double denom = 1.0 - out.phi[k];
    if (denom < 1e-12) fail(ErrorCode::DivisionNearZero, "1 - phi(t) vanishes at t > 0; refine the grid");
    out.theta[k] = (up.rho[k] + down.rho[k]) / (2.0 * denom);
  }
  out.theta[0] = n > 1 ? out.theta[1] : 0.0;
  return out;
}

DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size() || times.size() < 3)
    fail(ErrorCode::InvalidArgument, "need at least 3 matching (t, value) points");
  const double n = static_cast<double>(times.size());
  double st = 0, sy = 0;
  std::vector<double> ly(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) fail(ErrorCode::NonPositiveValue, "decay fit needs positive values");
    ly[i] = std::log(values[i]);
    st += times[i];
    sy += ly[i];
  }
  const double mt = st / n, my = sy / n;
  double stt = 0, sty = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    stt += (times[i] - mt) * (times[i] - mt);
    sty += (times[i] - mt) * (ly[i] - my);
  }
  if (stt == 0.0) fail(ErrorCode::InvalidArgument, "decay fit needs distinct times");
  DecayFit fit;
  fit.slope = sty / stt;
  fit.intercept = my - fit.slope * mt;
  double ss = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * times[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace gex
