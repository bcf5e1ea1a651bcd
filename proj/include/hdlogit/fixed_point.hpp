#pragma once

#include <Eigen/Dense>

#include "hdlogit/quadrature.hpp"

namespace hdlogit {

struct TheoryInputs {
  double kappa = 0.0;  // limiting p/n, in (0,1)
  double gamma = 0.0;  // limiting sqrt(beta' Sigma beta), >= 0
};

// Solution of the three-equation system in (alpha, sigma, lambda) at a
// (kappa, gamma) pair inside the existence region.
struct FixedPoint {
  double alpha = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  Eigen::Vector3d residuals = Eigen::Vector3d::Zero();
  TheoryInputs inputs;
};

// Residuals (lhs - rhs) of the three equations, evaluated by tensor
// Gauss-Hermite quadrature over (Q1, Q2) with
//   Q1 = gamma Z1,  Q2 = -alpha gamma Z1 + sqrt(kappa) sigma Z2.
Eigen::Vector3d system_residuals(double alpha, double sigma, double lambda,
                                 const TheoryInputs& in, const QuadratureGrid& grid);

struct SolveOptions {
  // 80 nodes per axis: refinement studies put the quadrature truncation of
  // the first equation near 1e-8 at gamma^2 = 5, where 40 nodes leave ~2e-5
  int quadrature_order = 80;
  int max_iter = 500;
  double tol = 1e-6;  // max |residual|
};

// Damped Newton with finite-difference Jacobian from (1+kappa, 1+gamma, 1).
// Results are memoized per (kappa, gamma) rounded to 1e-6; the cache is
// thread-safe (duplicate concurrent solves are idempotent).
FixedPoint solve_fixed_point(const TheoryInputs& in, const SolveOptions& opts = {});

}  // namespace hdlogit
