#pragma once

// Independent reference computations used only by tests. None of them call
// the library's simulation code; they share only the model tables.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gex/dual.hpp"
#include "gex/flip_model.hpp"
#include "gex/lattice.hpp"

namespace gex::oracle {

// Exact mean-field quantities of the IBP from one root, by RK4 on the closed
// system for a = P(root constant +1), b = P(root constant -1) and
// psi = E |pivotal set|. Pivotality of a slot is decided by brute force over
// the other slots being constant +1, constant -1 or free.
struct PsiCurve {
  std::vector<double> t;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> psi;
};
PsiCurve psi_ode(const Decomposition& dec, double T, double h = 1e-3);

// Generator of the Glauber-Exclusion chain on a d = 1 torus with N <= 12
// sites. State code bit u set iff site u is +1.
struct ExactChain {
  int L = 0;
  Eigen::MatrixXd Q;
};
ExactChain exact_chain(const LocalRateTable& rates, int L);
// Row x of exp(Q t), indexed by state code.
Eigen::MatrixXd transition_matrix(const ExactChain& chain, double t);
Eigen::VectorXd stationary_law(const ExactChain& chain);

// Leaves of the truncation of an IBP at time t whose flip changes some root
// for some assignment of the other leaves (exhaustive, <= 16 leaves).
std::vector<int> pivotal_by_enumeration(const IbpTree& tree, const Decomposition& dec, double t);
std::vector<int> pivotal_by_enumeration(const BepHistory& hist, const Decomposition& dec, double t);

// P(dist <= k at an Exp(theta) time) for the d = 1 relative coordinate of
// IP(2) (blocked = true) or two independent walks (blocked = false), both
// with conductance L^2, from separation y0. Dense resolvent solve.
double relative_walk_resolvent(int L, double theta, int k, int y0, bool blocked);

}  // namespace gex::oracle
