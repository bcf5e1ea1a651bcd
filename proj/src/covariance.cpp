#include "hdlogit/covariance.hpp"

#include <cmath>
#include <stdexcept>

namespace hdlogit {

namespace {

// Extreme eigenvalues by power iteration (lambda_max on sigma) and inverse
// power iteration (lambda_min through the Cholesky factor). Much cheaper than
// a full eigendecomposition and accurate well past what a condition number
// needs.
double extreme_eigenvalue(const CovarianceSpec& spec, bool largest) {
  const int p = spec.p;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p);
  for (int j = 0; j < p; ++j) v(j) += 1e-3 * std::sin(1.0 + j);  // break symmetry
  v.normalize();
  double ray = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd w;
    if (largest) {
      w = spec.sigma.selfadjointView<Eigen::Lower>() * v;
    } else {
      w = v;
      spec.chol.triangularView<Eigen::Lower>().solveInPlace(w);
      spec.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(w);
    }
    const double r = v.dot(w);
    w.normalize();
    const double drift = (w - v).norm();
    v = w;
    if (std::fabs(r - ray) <= 1e-12 * std::max(1.0, std::fabs(r)) && drift < 1e-9) {
      ray = r;
      break;
    }
    ray = r;
  }
  return largest ? ray : 1.0 / ray;
}

// Finish a spec whose sigma is already set: validate, factor, compute the
// precision diagonal and condition number.
void finalize(CovarianceSpec& spec) {
  const int p = spec.p;
  if (spec.sigma.rows() != p || spec.sigma.cols() != p)
    throw std::invalid_argument("covariance: sigma dimension mismatch");
  const double asym = (spec.sigma - spec.sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) throw std::invalid_argument("covariance: sigma not symmetric");

  Eigen::LLT<Eigen::MatrixXd> llt(spec.sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("covariance: sigma not positive definite");
  spec.chol = llt.matrixL();

  // smallest pivot L_jj^2 must clear 1e-10 of the largest diagonal entry
  const double min_pivot = spec.chol.diagonal().minCoeff();
  const double max_diag = spec.sigma.diagonal().maxCoeff();
  if (min_pivot * min_pivot <= 1e-10 * max_diag)
    throw std::runtime_error("covariance: sigma numerically singular");

  // Theta_jj = || L^{-1} e_j ||^2 = squared column norms of L^{-1}
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(p, p);
  spec.chol.triangularView<Eigen::Lower>().solveInPlace(linv);
  spec.theta_diag = linv.colwise().squaredNorm();

  if (spec.kind == CovKind::identity || p == 1) {
    spec.cond = 1.0;
  } else {
    spec.cond = extreme_eigenvalue(spec, true) / extreme_eigenvalue(spec, false);
  }
}

}  // namespace

CovarianceSpec make_identity(int p) {
  if (p < 1) throw std::invalid_argument("make_identity: p must be >= 1");
  CovarianceSpec spec;
  spec.kind = CovKind::identity;
  spec.p = p;
  spec.sigma = Eigen::MatrixXd::Identity(p, p);
  spec.chol = Eigen::MatrixXd::Identity(p, p);
  spec.theta_diag = Eigen::VectorXd::Ones(p);
  spec.cond = 1.0;
  return spec;
}

CovarianceSpec build_ar1(int p, double rho) {
  if (p < 1) throw std::invalid_argument("build_ar1: p must be >= 1");
  if (!(std::fabs(rho) < 1.0)) throw std::invalid_argument("build_ar1: |rho| must be < 1");
  CovarianceSpec spec;
  spec.kind = CovKind::ar1;
  spec.p = p;
  spec.rho = rho;
  spec.sigma.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) spec.sigma(i, j) = std::pow(rho, std::abs(i - j));
  finalize(spec);
  return spec;
}

CovarianceSpec build_random_correlation(int p, int df, RngStream& rng) {
  if (p < 2) throw std::invalid_argument("build_random_correlation: p must be >= 2");
  if (df < 1) throw std::invalid_argument("build_random_correlation: df must be >= 1");

  for (int attempt = 0; attempt < 5; ++attempt) {
    // Haar orthogonal U: QR of an i.i.d. Gaussian matrix, R-diagonal signs fixed
    Eigen::MatrixXd g(p, p);
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < p; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd u = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < p; ++j)
      if (r(j, j) < 0.0) u.col(j) = -u.col(j);

    // chi-squared(df) eigenvalues as sums of squared normals
    Eigen::VectorXd lam(p);
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int k = 0; k < df; ++k) {
        const double z = rng.normal();
        s += z * z;
      }
      lam(j) = s;
    }

    Eigen::MatrixXd b = u.transpose() * lam.asDiagonal() * u;
    b = 0.5 * (b + b.transpose().eval());
    const Eigen::VectorXd dinv = b.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd corr = dinv.asDiagonal() * b * dinv.asDiagonal();
    corr.diagonal().setOnes();
    corr = 0.5 * (corr + corr.transpose().eval());

    CovarianceSpec spec;
    spec.kind = CovKind::random_correlation;
    spec.p = p;
    spec.df = df;
    spec.sigma = std::move(corr);
    try {
      finalize(spec);
      return spec;
    } catch (const std::runtime_error&) {
      continue;  // non-PD after rescale: resample with the advanced stream
    }
  }
  throw std::runtime_error("build_random_correlation: no positive definite draw in 5 attempts");
}

CovarianceSpec make_explicit(const Eigen::MatrixXd& sigma) {
  CovarianceSpec spec;
  spec.kind = CovKind::explicit_matrix;
  spec.p = static_cast<int>(sigma.rows());
  if (spec.p < 1) throw std::invalid_argument("make_explicit: empty matrix");
  spec.sigma = sigma;
  finalize(spec);
  return spec;
}

Eigen::VectorXd conditional_sd(const CovarianceSpec& spec) {
  return spec.theta_diag.cwiseSqrt().cwiseInverse();
}

double tau_of_direction(const CovarianceSpec& spec, const Eigen::VectorXd& v) {
  if (v.size() != spec.p) throw std::invalid_argument("tau_of_direction: dimension mismatch");
  if (std::fabs(v.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("tau_of_direction: v must be unit norm");
  // v^T Sigma^{-1} v = || L^{-1} v ||^2
  Eigen::VectorXd w = spec.chol.triangularView<Eigen::Lower>().solve(v);
  return 1.0 / w.norm();
}

Eigen::MatrixXd schur_precision_block(const CovarianceSpec& spec, const std::vector<int>& idx) {
  const int s = static_cast<int>(idx.size());
  if (s == 0 || s > spec.p) throw std::invalid_argument("schur_precision_block: bad index set");
  for (int a = 0; a < s; ++a) {
    if (idx[a] < 0 || idx[a] >= spec.p)
      throw std::invalid_argument("schur_precision_block: index out of range");
    for (int b = a + 1; b < s; ++b)
      if (idx[a] == idx[b]) throw std::invalid_argument("schur_precision_block: duplicate index");
  }
  // Theta e_j via two triangular solves per requested column
  Eigen::MatrixXd cols(spec.p, s);
  for (int a = 0; a < s; ++a) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(spec.p);
    e(idx[a]) = 1.0;
    spec.chol.triangularView<Eigen::Lower>().solveInPlace(e);
    spec.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(e);
    cols.col(a) = e;
  }
  Eigen::MatrixXd block(s, s);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) block(a, b) = cols(idx[a], b);
  return 0.5 * (block + block.transpose().eval());
}

DesignMatrix sample_design(int n, const CovarianceSpec& spec, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_design: n must be >= 1");
  const int p = spec.p;
  DesignMatrix d;
  d.x.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.normal();

  switch (spec.kind) {
    case CovKind::identity:
      break;
    case CovKind::ar1: {
      // x_j = rho x_{j-1} + sqrt(1-rho^2) z_j is exactly chol * z for the
      // AR(1) correlation matrix; O(np) instead of a triangular product
      const double c = std::sqrt(1.0 - spec.rho * spec.rho);
      for (int i = 0; i < n; ++i)
        for (int j = 1; j < p; ++j) d.x(i, j) = spec.rho * d.x(i, j - 1) + c * d.x(i, j);
      break;
    }
    default:
      d.x = d.x * spec.chol.transpose();
      break;
  }
  return d;
}

}  // namespace hdlogit
