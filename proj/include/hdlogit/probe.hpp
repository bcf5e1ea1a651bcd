#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hdlogit/fixed_point.hpp"
#include "hdlogit/frontier.hpp"

namespace hdlogit {

struct ProbeConfig {
  // candidate dimension ratios, strictly increasing, all above the dataset's
  // own p/n; empty means p/n + 0.02 up to 0.5 in steps of 0.02
  std::vector<double> kappa_grid;
  int resamples_per_kappa = 10;
  double crossing_target = 0.5;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double kappa_hat = 0.0;
  double gamma_hat = 0.0;
  std::vector<double> kappas;     // evaluated grid points
  std::vector<double> fractions;  // separable fraction per evaluated point
};

struct ProbeError : std::runtime_error {
  enum class Kind { already_separable, grid_exhausted };
  Kind kind;
  ProbeError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Estimates the signal strength of (X, y) by subsampling to higher dimension
// ratios until complete separation appears in half of the resamples, then
// inverting the frontier curve at the crossing.
ProbeResult probe(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ProbeConfig& cfg,
                  const FrontierCurve& curve);

// Solves the fixed-point system at the dataset's own kappa and the probe's
// gamma estimate.
FixedPoint estimate_theory_params(double kappa, double gamma_hat);

}  // namespace hdlogit
