#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hdlogit/rng.hpp"

namespace hdlogit {

enum class CovKind { identity, ar1, random_correlation, explicit_matrix };

// Declarative covariance model with its Cholesky factor, precision diagonal
// and condition number precomputed. Immutable after construction and safe to
// share across threads.
struct CovarianceSpec {
  CovKind kind = CovKind::identity;
  int p = 0;
  double rho = 0.0;        // ar1 only
  int df = 0;              // random_correlation only
  std::uint64_t seed = 0;  // random_correlation only

  Eigen::MatrixXd sigma;       // p x p, symmetric positive definite
  Eigen::MatrixXd chol;        // lower triangular, chol * chol^T = sigma
  Eigen::VectorXd theta_diag;  // diagonal of the precision matrix sigma^{-1}
  double cond = 1.0;           // lambda_max / lambda_min
};

CovarianceSpec make_identity(int p);
CovarianceSpec build_ar1(int p, double rho);
// Haar-random orthogonal eigenvectors, chi-squared(df) eigenvalues, rescaled
// to a correlation matrix.
CovarianceSpec build_random_correlation(int p, int df, RngStream& rng);
CovarianceSpec make_explicit(const Eigen::MatrixXd& sigma);

// tau_j = 1/sqrt(Theta_jj): conditional standard deviation of covariate j
// given all the others.
Eigen::VectorXd conditional_sd(const CovarianceSpec& spec);

// tau(v) = (v^T Sigma^{-1} v)^{-1/2}, via two triangular solves; v must be
// unit-norm.
double tau_of_direction(const CovarianceSpec& spec, const Eigen::VectorXd& v);

// Sub-block of the precision matrix at rows/columns in idx.
Eigen::MatrixXd schur_precision_block(const CovarianceSpec& spec, const std::vector<int>& idx);

struct DesignMatrix {
  Eigen::MatrixXd x;  // n x p, rows i.i.d. N(0, sigma)
  int n() const { return static_cast<int>(x.rows()); }
  int p() const { return static_cast<int>(x.cols()); }
};

DesignMatrix sample_design(int n, const CovarianceSpec& spec, RngStream& rng);

}  // namespace hdlogit
