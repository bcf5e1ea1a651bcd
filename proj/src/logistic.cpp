#include "hdlogit/logistic.hpp"

#include <cmath>

#include "hdlogit/link.hpp"

namespace hdlogit {

Eigen::VectorXd validate_labels(const Eigen::VectorXd& y) {
  Eigen::VectorXd out(y.size());
  bool saw_pos = false, saw_neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 1.0) {
      out(i) = 1.0;
      saw_pos = true;
    } else if (y(i) == -1.0 || y(i) == 0.0) {
      out(i) = -1.0;
      saw_neg = true;
    } else {
      throw std::invalid_argument("labels must be in {-1,+1} or {0,1}");
    }
  }
  if (!saw_pos || !saw_neg) throw std::invalid_argument("labels must contain both classes");
  return out;
}

namespace {

// per-term -log(1+e^{-t}) = -log1p(e^{-|t|}) - max(-t, 0)
inline double loglik_term(double t) {
  return -std::log1p(std::exp(-std::fabs(t))) - std::max(-t, 0.0);
}

double loglik_of_margins(const Eigen::VectorXd& t) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) s += loglik_term(t(i));
  return s;
}

}  // namespace

double log_likelihood(const Eigen::VectorXd& b, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y) {
  if (b.size() != X.cols() || y.size() != X.rows())
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  const Eigen::VectorXd t = y.cwiseProduct(X * b);
  return loglik_of_margins(t);
}

void grad_hess(const Eigen::VectorXd& b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (b.size() != p || y.size() != n) throw std::invalid_argument("grad_hess: dimension mismatch");
  const Eigen::VectorXd xb = X * b;
  Eigen::VectorXd s(n), d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i) = y(i) * rho_prime(-y(i) * xb(i));
    d(i) = rho_second(xb(i));
  }
  grad = X.transpose() * s;
  const Eigen::MatrixXd w = d.cwiseSqrt().asDiagonal() * X;
  hess.resize(p, p);
  hess.setZero();
  hess.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose(), -1.0);
  hess.triangularView<Eigen::StrictlyUpper>() = hess.transpose();
}

namespace {

FitResult newton_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opts) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const double grad_tol = opts.grad_tol_per_n * static_cast<double>(n);

  FitResult res;
  res.beta_hat = opts.start ? *opts.start : Eigen::VectorXd::Zero(p);
  if (res.beta_hat.size() != p) throw std::invalid_argument("fit: start dimension mismatch");

  Eigen::VectorXd xb = X * res.beta_hat;
  Eigen::VectorXd t = y.cwiseProduct(xb);
  double ll = loglik_of_margins(t);

  Eigen::VectorXd s(n), d(n), grad(p);
  Eigen::MatrixXd h(p, p);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      s(i) = y(i) * rho_prime(-t(i));
      d(i) = rho_second(xb(i));
    }
    grad.noalias() = X.transpose() * s;
    res.grad_norm = grad.norm();
    res.iterations = iter;
    res.loglik = ll;
    if (res.grad_norm <= grad_tol) {
      // a numerically perfect fit means the gradient vanished because the
      // likelihood ran off to its supremum along a separating direction
      if (ll > -1e-6 * static_cast<double>(n)) {
        res.failure = FitFailure::separable_suspect;
        return res;
      }
      res.converged = true;
      return res;
    }
    if (res.beta_hat.norm() > opts.norm_cap) {
      res.failure = FitFailure::separable_suspect;
      return res;
    }

    // positive-definite system (X^T D X) delta = grad
    const Eigen::MatrixXd w = d.cwiseSqrt().asDiagonal() * X;
    h.setZero();
    h.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose(), 1.0);
    Eigen::LLT<Eigen::MatrixXd> llt(h.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) {
      const double ridge = 1e-10 * h.diagonal().sum() / static_cast<double>(p);
      h.diagonal().array() += ridge;
      llt.compute(h.selfadjointView<Eigen::Lower>());
      if (llt.info() != Eigen::Success) {
        res.failure = FitFailure::max_iter;
        return res;
      }
    }
    const Eigen::VectorXd delta = llt.solve(grad);
    const Eigen::VectorXd xdelta = X * delta;

    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half <= opts.max_halvings; ++half) {
      const Eigen::VectorXd t_new = y.cwiseProduct(xb + step * xdelta);
      const double ll_new = loglik_of_margins(t_new);
      if (ll_new >= ll) {
        res.beta_hat += step * delta;
        xb += step * xdelta;
        t = t_new;
        ll = ll_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.failure = FitFailure::max_iter;
      res.iterations = iter + 1;
      return res;
    }
  }
  res.iterations = opts.max_iter;
  res.loglik = ll;
  res.failure = res.beta_hat.norm() > opts.norm_cap ? FitFailure::separable_suspect
                                                    : FitFailure::max_iter;
  return res;
}

}  // namespace

FitResult fit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opts) {
  if (X.rows() <= X.cols()) throw std::invalid_argument("fit_mle: requires n > p");
  const Eigen::VectorXd yy = validate_labels(y);
  return newton_fit(X, yy, opts);
}

FitResult fit_restricted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::vector<int>& zero_set, const FitOptions& opts) {
  const Eigen::Index p = X.cols();
  std::vector<bool> drop(static_cast<size_t>(p), false);
  for (int j : zero_set) {
    if (j < 0 || j >= p) throw std::invalid_argument("fit_restricted: index out of range");
    drop[static_cast<size_t>(j)] = true;
  }
  const Eigen::Index keep = p - static_cast<Eigen::Index>(zero_set.size());
  if (keep == 0) {
    // all coordinates pinned: beta = 0 and the log-likelihood is -n log 2
    FitResult res;
    res.beta_hat = Eigen::VectorXd::Zero(p);
    res.converged = true;
    res.loglik = -static_cast<double>(X.rows()) * std::log(2.0);
    res.grad_norm = 0.0;
    return res;
  }

  Eigen::MatrixXd xr(X.rows(), keep);
  std::vector<Eigen::Index> cols;
  cols.reserve(static_cast<size_t>(keep));
  for (Eigen::Index j = 0; j < p; ++j)
    if (!drop[static_cast<size_t>(j)]) cols.push_back(j);
  for (Eigen::Index k = 0; k < keep; ++k) xr.col(k) = X.col(cols[static_cast<size_t>(k)]);

  FitOptions ropts = opts;
  if (opts.start) {
    Eigen::VectorXd rs(keep);
    for (Eigen::Index k = 0; k < keep; ++k) rs(k) = (*opts.start)(cols[static_cast<size_t>(k)]);
    ropts.start = rs;
  }
  FitResult inner = fit_mle(xr, y, ropts);

  Eigen::VectorXd full = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < keep; ++k) full(cols[static_cast<size_t>(k)]) = inner.beta_hat(k);
  inner.beta_hat = std::move(full);
  return inner;
}

double llr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& zero_set,
           const FitOptions& opts) {
  const FitResult full = fit_mle(X, y, opts);
  if (!full.converged) throw NonConvergence(full);
  FitOptions ropts = opts;
  ropts.start = full.beta_hat;  // warm start; the restricted optimum is unique
  const FitResult restricted = fit_restricted(X, y, zero_set, ropts);
  if (!restricted.converged) throw NonConvergence(restricted);
  return std::max(0.0, full.loglik - restricted.loglik);
}

double observed_info_inv_diag(const Eigen::MatrixXd& X, const Eigen::VectorXd& b, int j) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (j < 0 || j >= p) throw std::invalid_argument("observed_info_inv_diag: bad index");
  const Eigen::VectorXd xb = X * b;
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = rho_second(xb(i));
  const Eigen::MatrixXd w = d.cwiseSqrt().asDiagonal() * X;
  Eigen::MatrixXd info(p, p);
  info.setZero();
  info.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose(), 1.0);
  Eigen::LLT<Eigen::MatrixXd> llt(info.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("observed_info_inv_diag: information matrix not PD");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
  e(j) = 1.0;
  return llt.solve(e)(j);
}

}  // namespace hdlogit
