#include "hdlogit/inference.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "hdlogit/special.hpp"

namespace hdlogit {

namespace {

Eigen::MatrixXd gram(const Eigen::MatrixXd& X) {
  const Eigen::Index p = X.cols();
  Eigen::MatrixXd g(p, p);
  g.setZero();
  g.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0);
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

}  // namespace

double estimate_tau_rss(const Eigen::MatrixXd& X, int j) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n <= p) throw std::invalid_argument("estimate_tau_rss: requires n > p");
  if (j < 0 || j >= p) throw std::invalid_argument("estimate_tau_rss: bad index");
  const Eigen::MatrixXd g = gram(X);

  // RSS_j = G_jj - G_{-j,j}' G_{-j,-j}^{-1} G_{-j,j}
  Eigen::MatrixXd gr(p - 1, p - 1);
  Eigen::VectorXd cross(p - 1);
  Eigen::Index a = 0;
  for (Eigen::Index r = 0; r < p; ++r) {
    if (r == j) continue;
    cross(a) = g(r, j);
    Eigen::Index b = 0;
    for (Eigen::Index c = 0; c < p; ++c) {
      if (c == j) continue;
      gr(a, b++) = g(r, c);
    }
    ++a;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gr);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("estimate_tau_rss: reduced design is rank deficient");
  const double rss = g(j, j) - cross.dot(llt.solve(cross));
  if (rss <= 1e-10 * g(j, j))
    throw std::runtime_error("estimate_tau_rss: column " + std::to_string(j) +
                             " is collinear with the others");
  const double kappa = static_cast<double>(p) / static_cast<double>(n);
  return std::sqrt((rss / static_cast<double>(n)) / (1.0 - kappa));
}

Eigen::VectorXd estimate_tau_rss_all(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n <= p) throw std::invalid_argument("estimate_tau_rss_all: requires n > p");
  const Eigen::MatrixXd g = gram(X);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("estimate_tau_rss_all: design is rank deficient");
  const Eigen::MatrixXd ginv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  const double kappa = static_cast<double>(p) / static_cast<double>(n);
  Eigen::VectorXd tau(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double rss = 1.0 / ginv(j, j);  // RSS_j = 1 / [(X'X)^{-1}]_jj
    tau(j) = std::sqrt((rss / static_cast<double>(n)) / (1.0 - kappa));
  }
  return tau;
}

double estimate_rho_ar1(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (p < 2) throw std::invalid_argument("estimate_rho_ar1: need at least two columns");

  // sufficient statistics of the stationary AR(1) likelihood, pooled over rows
  double s_first = 0.0;  // sum of x_1^2
  double s_head = 0.0;   // sum over j=1..p-1 of x_j^2
  double s_tail = 0.0;   // sum over j=2..p   of x_j^2
  double s_cross = 0.0;  // sum over j=2..p   of x_j x_{j-1}
  for (Eigen::Index i = 0; i < n; ++i) {
    s_first += X(i, 0) * X(i, 0);
    for (Eigen::Index j = 1; j < p; ++j) {
      s_head += X(i, j - 1) * X(i, j - 1);
      s_tail += X(i, j) * X(i, j);
      s_cross += X(i, j) * X(i, j - 1);
    }
  }
  const double m = static_cast<double>(n) * static_cast<double>(p - 1);

  auto negloglik = [&](double rho) {
    const double v = 1.0 - rho * rho;
    return 0.5 * (s_first + (s_tail - 2.0 * rho * s_cross + rho * rho * s_head) / v) +
           0.5 * m * std::log(v);
  };

  // golden-section search on (-0.999, 0.999); the profile is smooth and
  // unimodal for stationary data
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = -0.999, b = 0.999;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = negloglik(c), fd = negloglik(d);
  for (int it = 0; it < 200 && (b - a) > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = negloglik(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = negloglik(d);
    }
  }
  return 0.5 * (a + b);
}

std::pair<double, double> adjusted_ci(double beta_hat_j, double alpha, double sigma, double tau_j,
                                      int n, double level) {
  if (!(alpha > 0.0 && tau_j > 0.0 && level > 0.0 && level < 1.0))
    throw std::invalid_argument("adjusted_ci: bad parameters");
  const double z = norm_quantile(0.5 * (1.0 + level));
  const double half = z * sigma / (std::sqrt(static_cast<double>(n)) * tau_j);
  return {(beta_hat_j - half) / alpha, (beta_hat_j + half) / alpha};
}

double t_pvalue(double beta_hat_j, double sigma, double tau_j, int n) {
  if (!(sigma > 0.0 && tau_j > 0.0)) throw std::invalid_argument("t_pvalue: bad parameters");
  const double t = std::sqrt(static_cast<double>(n)) * tau_j * std::fabs(beta_hat_j) / sigma;
  return 2.0 * norm_sf(t);
}

double lrt_pvalue(double llr_value, double kappa, double sigma, double lambda, int ell) {
  if (llr_value < 0.0) throw std::invalid_argument("lrt_pvalue: llr must be >= 0");
  if (!(kappa > 0.0 && sigma > 0.0 && lambda > 0.0 && ell >= 1))
    throw std::invalid_argument("lrt_pvalue: bad parameters");
  const double stat = (lambda / (kappa * sigma * sigma)) * 2.0 * llr_value;
  return chisq_sf(stat, static_cast<double>(ell));
}

Eigen::VectorXd standardize_T(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                              double alpha_star, double sigma_star, const Eigen::VectorXd& tau,
                              int n) {
  if (beta_hat.size() != beta_true.size() || beta_hat.size() != tau.size())
    throw std::invalid_argument("standardize_T: dimension mismatch");
  const double root_n = std::sqrt(static_cast<double>(n));
  return (root_n / sigma_star) *
         (beta_hat - alpha_star * beta_true).cwiseProduct(tau);
}

Eigen::VectorXd standardize_multi(const Eigen::VectorXd& beta_hat_S, const Eigen::VectorXd& beta_S,
                                  const Eigen::MatrixXd& theta_S, double alpha_star,
                                  double sigma_star, int n) {
  const Eigen::Index s = beta_hat_S.size();
  if (beta_S.size() != s || theta_S.rows() != s || theta_S.cols() != s)
    throw std::invalid_argument("standardize_multi: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta_S);
  if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0.0)
    throw std::runtime_error("standardize_multi: precision block not positive definite");
  const Eigen::MatrixXd inv_sqrt = es.eigenvectors() *
                                   es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                   es.eigenvectors().transpose();
  return (std::sqrt(static_cast<double>(n)) / sigma_star) *
         (inv_sqrt * (beta_hat_S - alpha_star * beta_S));
}

InferenceReport build_report(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const FitResult& fit, const FixedPoint& params, TauSource tau_source,
                             double level, bool with_lrt, const Eigen::VectorXd* tau_provided) {
  if (!fit.converged) throw std::invalid_argument("build_report: fit did not converge");
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());

  Eigen::VectorXd tau;
  switch (tau_source) {
    case TauSource::rss:
      tau = estimate_tau_rss_all(X);
      break;
    case TauSource::ar1: {
      const double rho_hat = estimate_rho_ar1(X);
      tau = conditional_sd(build_ar1(p, rho_hat));
      break;
    }
    case TauSource::provided:
      if (!tau_provided || tau_provided->size() != p)
        throw std::invalid_argument("build_report: provided tau missing or wrong size");
      tau = *tau_provided;
      break;
  }

  InferenceReport report;
  report.header = {n,
                   p,
                   static_cast<double>(p) / n,
                   params.inputs.gamma,
                   params.alpha,
                   params.sigma,
                   params.lambda,
                   level};
  report.rows.resize(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) {
    CoordinateInference row;
    row.j = j;
    row.beta_hat = fit.beta_hat(j);
    row.tau_hat = tau(j);
    row.debiased = row.beta_hat / params.alpha;
    std::tie(row.ci_lo, row.ci_hi) =
        adjusted_ci(row.beta_hat, params.alpha, params.sigma, tau(j), n, level);
    row.p_t = t_pvalue(row.beta_hat, params.sigma, tau(j), n);
    if (with_lrt) {
      FitOptions opts;
      opts.start = fit.beta_hat;
      const double lv = llr(X, y, {j}, opts);
      row.p_lrt = lrt_pvalue(lv, report.header.kappa, params.sigma, params.lambda);
    }
    report.rows[static_cast<size_t>(j)] = row;
  }
  return report;
}

std::string report_csv(const InferenceReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "j,beta_hat,tau_hat,debiased,ci_lo,ci_hi,p_t,p_lrt\n";
  for (const auto& r : report.rows) {
    out << r.j << ',' << r.beta_hat << ',' << r.tau_hat << ',' << r.debiased << ',' << r.ci_lo
        << ',' << r.ci_hi << ',' << r.p_t << ',';
    if (r.p_lrt) out << *r.p_lrt;
    out << '\n';
  }
  return out.str();
}

std::string report_json_header(const InferenceReport& report) {
  nlohmann::ordered_json j;
  j["n"] = report.header.n;
  j["p"] = report.header.p;
  j["kappa"] = report.header.kappa;
  j["gamma_hat"] = report.header.gamma_hat;
  j["alpha_hat"] = report.header.alpha_hat;
  j["sigma_hat"] = report.header.sigma_hat;
  j["lambda_hat"] = report.header.lambda_hat;
  j["level"] = report.header.level;
  return j.dump(2) + "\n";
}

}  // namespace hdlogit
