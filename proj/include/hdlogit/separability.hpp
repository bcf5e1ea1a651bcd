#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

namespace hdlogit {

struct SeparabilityReport {
  bool separable = false;
  // present iff separable: b with y_i x_i^T b >= 1 for all i
  std::optional<Eigen::VectorXd> witness;
};

struct SeparabilityOptions {
  // The decision is norm-bounded: "separable" means a margin-1 witness with
  // ||b|| <= witness_norm_cap exists; "non-separable" carries a certificate
  // that every margin-1 separator (if any) has a larger norm. Margins below
  // 1/witness_norm_cap per unit norm are indistinguishable from separation
  // failure at double precision and are reported as non-separable.
  double witness_norm_cap = 200.0;
  int max_epochs = 2000;
};

struct IndeterminateSeparability : std::runtime_error {
  IndeterminateSeparability()
      : std::runtime_error("separability: iteration cap hit without a certificate") {}
};

// Decides feasibility of { b : y_i x_i^T b >= 1 for all i } (complete
// separation) by coordinate ascent on the dual of the margin-maximization
// program. Returns either a verified margin-1 witness or a Gordan-style
// convex-combination certificate that every separator is enormous.
SeparabilityReport check_separable(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const SeparabilityOptions& opts = {});

}  // namespace hdlogit
