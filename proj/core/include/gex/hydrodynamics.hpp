#pragma once

#include <vector>

#include "gex/flip_model.hpp"

namespace gex {

// rho' = R(rho) on the uniform grid t_k = k*h, k = 0..n, t_n = T.
struct OdeSolution {
  double h = 0.0;
  std::vector<double> t;
  std::vector<double> rho;

  // Cubic Hermite interpolation between grid nodes using R for slopes.
  double at(double time, const ReactionPolynomial& p) const;
};

// Classical RK4. The step actually used is T / ceil(T/h) <= h.
// Throws StepTooLarge if h * max_{[-1,1]} |R'| > 0.5.
OdeSolution solve_ode(const ReactionPolynomial& p, double rho0, double T, double h = 1e-3);

struct DerivedFunctions {
  std::vector<double> t;
  std::vector<double> rho_plus;
  std::vector<double> rho_minus;
  std::vector<double> phi;    // (rho_+ - rho_-)/2
  std::vector<double> theta;  // (rho_+ + rho_-)/(2(1-phi)); theta[0] copies theta[1]
};

DerivedFunctions derived_functions(const ReactionPolynomial& p, double T, double h = 1e-3);

struct DecayFit {
  double slope;
  double intercept;
  double residual;  // root-mean-square residual of the log-linear fit
};

// Least squares line through (t, log value).
DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values);

}  // namespace gex
