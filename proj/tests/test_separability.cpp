#include <doctest.h>

#include <Eigen/Dense>

#include "hdlogit/covariance.hpp"
#include "hdlogit/link.hpp"
#include "hdlogit/logistic.hpp"
#include "hdlogit/rng.hpp"
#include "hdlogit/separability.hpp"

using namespace hdlogit;

TEST_CASE("single class with positive x is separable") {
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, 0.5;
  Eigen::VectorXd y(3);
  y << 1, 1, 1;
  const SeparabilityReport rep = check_separable(x, y);
  CHECK(rep.separable);
  REQUIRE(rep.witness.has_value());
  CHECK((*rep.witness)(0) > 0.0);
  const Eigen::VectorXd margins = y.asDiagonal() * x * (*rep.witness);
  CHECK(margins.minCoeff() >= 1.0 - 1e-6);
}

TEST_CASE("balanced contradictory constraints are not separable") {
  Eigen::MatrixXd x(4, 1);
  x << 1, 1, -1, -1;
  Eigen::VectorXd y(4);
  y << 1, -1, 1, -1;
  const SeparabilityReport rep = check_separable(x, y);
  CHECK_FALSE(rep.separable);
  CHECK_FALSE(rep.witness.has_value());
}

TEST_CASE("clean two-dimensional split is separable with a verified witness") {
  Eigen::MatrixXd x(6, 2);
  x << 1.0, 0.2, 2.0, -0.3, 1.5, 0.8, -1.0, 0.4, -2.0, -0.6, -0.8, 0.1;
  Eigen::VectorXd y(6);
  y << 1, 1, 1, -1, -1, -1;
  const SeparabilityReport rep = check_separable(x, y);
  CHECK(rep.separable);
  const Eigen::VectorXd margins = y.asDiagonal() * x * (*rep.witness);
  CHECK(margins.minCoeff() >= 1.0 - 1e-6);
}

TEST_CASE("high-gamma small design is separable with high probability") {
  // n=40, p=20, gamma^2 = 25: far above the frontier at kappa = 0.5
  int sep = 0;
  const int trials = 50;
  for (int s = 0; s < trials; ++s) {
    RngStream rng(100 + static_cast<std::uint64_t>(s));
    const CovarianceSpec spec = make_identity(20);
    const DesignMatrix d = sample_design(40, spec, rng);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(20);
    beta(0) = 5.0;
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i)
      y(i) = rng.uniform() < rho_prime(d.x.row(i).dot(beta)) ? 1.0 : -1.0;
    if (check_separable(d.x, d.x.rows() ? y : y).separable) ++sep;
  }
  CHECK(sep > trials / 2);
}

TEST_CASE("separability flag is consistent with fit divergence") {
  // every instance the solver flags separable must make the MLE diverge;
  // near-frontier draws may come back indeterminate, which is fine here
  int decided = 0;
  for (int s = 0; s < 10; ++s) {
    RngStream rng(500 + static_cast<std::uint64_t>(s));
    const CovarianceSpec spec = make_identity(15);
    const DesignMatrix d = sample_design(60, spec, rng);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(15);
    beta(0) = 4.0;
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i)
      y(i) = rng.uniform() < rho_prime(d.x.row(i).dot(beta)) ? 1.0 : -1.0;
    try {
      const SeparabilityReport rep = check_separable(d.x, y);
      ++decided;
      if (rep.separable) {
        const FitResult fit = fit_mle(d.x, y);
        CHECK_FALSE(fit.converged);
      }
    } catch (const IndeterminateSeparability&) {
    }
  }
  CHECK(decided >= 8);
}
