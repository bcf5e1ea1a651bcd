#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hdlogit/covariance.hpp"
#include "hdlogit/fixed_point.hpp"
#include "hdlogit/logistic.hpp"

namespace hdlogit {

// RSS-based conditional-variance estimate of coordinate j:
// tau_hat_j^2 = (RSS_j / n) / (1 - p/n).
double estimate_tau_rss(const Eigen::MatrixXd& X, int j);
// All coordinates at once through the Gram inverse (RSS_j = 1/[(X'X)^{-1}]_jj).
Eigen::VectorXd estimate_tau_rss_all(const Eigen::MatrixXd& X);

// Pooled exact stationary-AR(1) Gaussian MLE of rho over the rows of X.
double estimate_rho_ar1(const Eigen::MatrixXd& X);

// (beta_hat_j -/+ z * sigma/(sqrt(n) tau_j)) / alpha
std::pair<double, double> adjusted_ci(double beta_hat_j, double alpha, double sigma, double tau_j,
                                      int n, double level);

// 2 * Phi_bar( sqrt(n) tau_j |beta_hat_j| / sigma )
double t_pvalue(double beta_hat_j, double sigma, double tau_j, int n);

// P( chisq_ell >= (lambda / (kappa sigma^2)) * 2 * llr )
double lrt_pvalue(double llr_value, double kappa, double sigma, double lambda, int ell = 1);

// T_j = sqrt(n) (beta_hat_j - alpha beta_j) tau_j / sigma
Eigen::VectorXd standardize_T(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                              double alpha_star, double sigma_star, const Eigen::VectorXd& tau,
                              int n);

// sqrt(n) Theta_S^{-1/2} (beta_hat_S - alpha beta_S) / sigma via the
// symmetric eigen square root.
Eigen::VectorXd standardize_multi(const Eigen::VectorXd& beta_hat_S, const Eigen::VectorXd& beta_S,
                                  const Eigen::MatrixXd& theta_S, double alpha_star,
                                  double sigma_star, int n);

enum class TauSource { rss, ar1, provided };

struct InferenceHeader {
  int n = 0, p = 0;
  double kappa = 0.0;
  double gamma_hat = 0.0;
  double alpha_hat = 1.0;
  double sigma_hat = 1.0;
  double lambda_hat = 1.0;
  double level = 0.95;
};

struct CoordinateInference {
  int j = 0;
  double beta_hat = 0.0;
  double tau_hat = 0.0;
  double debiased = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double p_t = 1.0;
  std::optional<double> p_lrt;
};

struct InferenceReport {
  InferenceHeader header;
  std::vector<CoordinateInference> rows;
};

// One record per coordinate; LRT p-values only when with_lrt is set (each one
// costs a restricted refit).
InferenceReport build_report(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const FitResult& fit, const FixedPoint& params, TauSource tau_source,
                             double level, bool with_lrt = false,
                             const Eigen::VectorXd* tau_provided = nullptr);

std::string report_csv(const InferenceReport& report);
std::string report_json_header(const InferenceReport& report);

}  // namespace hdlogit
