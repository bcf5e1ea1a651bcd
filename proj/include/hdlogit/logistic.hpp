#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hdlogit {

// Labels live in {-1,+1}. validate_labels maps 0/1 input to that convention
// and rejects anything else.
Eigen::VectorXd validate_labels(const Eigen::VectorXd& y);

// separable_suspect: the iterate blew past norm_cap, or the fit reached a
// numerically perfect classification (loglik ~ 0), both signatures of a
// divergent MLE; callers disambiguate with check_separable.
enum class FitFailure { none, max_iter, separable_suspect };

struct FitResult {
  Eigen::VectorXd beta_hat;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double grad_norm = 0.0;
  FitFailure failure = FitFailure::none;
};

struct FitOptions {
  int max_iter = 200;
  // convergence when ||gradient||_2 <= grad_tol_per_n * n
  double grad_tol_per_n = 1e-8;
  double norm_cap = 1e3;
  int max_halvings = 30;
  // optional warm start; the optimum is unique on non-separable data, so this
  // only changes iteration counts, never the fitted value
  std::optional<Eigen::VectorXd> start;
};

// sum_i -log(1 + exp(-y_i x_i^T b)), stable for any magnitude of the margins.
double log_likelihood(const Eigen::VectorXd& b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// gradient = X^T (y .* rho'(-y .* Xb)); hessian = -X^T D X, D_ii = rho''(x_i^T b)
void grad_hess(const Eigen::VectorXd& b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               Eigen::VectorXd& grad, Eigen::MatrixXd& hess);

// Damped Newton (step halving on the log-likelihood) from b = 0.
FitResult fit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opts = {});

// MLE with the coordinates in zero_set pinned to 0 (fit on the reduced
// column set, re-embedded with zeros).
FitResult fit_restricted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::vector<int>& zero_set, const FitOptions& opts = {});

struct NonConvergence : std::runtime_error {
  FitResult fit;
  explicit NonConvergence(const FitResult& f)
      : std::runtime_error("logistic fit did not converge"), fit(f) {}
};

// Log-likelihood ratio for H0: beta_S = 0; throws NonConvergence carrying the
// offending FitResult if either fit fails.
double llr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& zero_set,
           const FitOptions& opts = {});

// Observed information (X^T D X) inverse diagonal entry at b; classical Wald
// standard error of coordinate j is the square root of this.
double observed_info_inv_diag(const Eigen::MatrixXd& X, const Eigen::VectorXd& b, int j);

}  // namespace hdlogit
