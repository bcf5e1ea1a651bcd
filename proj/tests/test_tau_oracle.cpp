#include <doctest.h>

#include <cmath>

#include "hdlogit/covariance.hpp"
#include "hdlogit/inference.hpp"
#include "hdlogit/rng.hpp"

using namespace hdlogit;

TEST_CASE("tau rss at the paper's operating size, identity covariance") {
  RngStream rng(2024);
  const CovarianceSpec id = make_identity(800);
  const DesignMatrix d = sample_design(4000, id, rng);
  const Eigen::VectorXd tau = estimate_tau_rss_all(d.x);
  CHECK(tau.mean() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("tau rss against the analytic precision diagonal under ar1") {
  RngStream rng(2025);
  const CovarianceSpec spec = build_ar1(800, 0.5);
  const DesignMatrix d = sample_design(4000, spec, rng);
  const int j = 400;  // interior: tau^2 = 0.6
  const double tau_hat = estimate_tau_rss(d.x, j);
  CHECK(tau_hat * tau_hat == doctest::Approx(0.6).epsilon(0.05 / 0.6));
}

TEST_CASE("tau rss average over seeds stays within two percent") {
  double lo = 10.0, hi = 0.0;
  for (int s = 0; s < 20; ++s) {
    RngStream rng(3000 + static_cast<std::uint64_t>(s));
    const CovarianceSpec id = make_identity(800);
    const DesignMatrix d = sample_design(4000, id, rng);
    const Eigen::VectorXd tau = estimate_tau_rss_all(d.x);
    const double mean_tau2 = tau.array().square().mean();
    lo = std::min(lo, mean_tau2);
    hi = std::max(hi, mean_tau2);
  }
  CHECK(lo >= 0.97);
  CHECK(hi <= 1.03);
}

TEST_CASE("ar1 rho maximum likelihood at scale") {
  RngStream rng(2026);
  const CovarianceSpec spec = build_ar1(800, 0.5);
  const DesignMatrix d = sample_design(4000, spec, rng);
  CHECK(estimate_rho_ar1(d.x) == doctest::Approx(0.5).epsilon(0.01 / 0.5));

  RngStream rng0(2027);
  const CovarianceSpec id = make_identity(800);
  const DesignMatrix d0 = sample_design(4000, id, rng0);
  CHECK(std::fabs(estimate_rho_ar1(d0.x)) < 0.02);

  // parametric tau from rho_hat matches the analytic interior value
  const double rho_hat = estimate_rho_ar1(d.x);
  const Eigen::VectorXd tau = conditional_sd(build_ar1(800, rho_hat));
  CHECK(tau(400) * tau(400) ==
        doctest::Approx((1.0 - rho_hat * rho_hat) / (1.0 + rho_hat * rho_hat)).epsilon(1e-10));
}
