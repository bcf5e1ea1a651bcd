#pragma once

#include <Eigen/Dense>

namespace hdlogit {

// Gauss-Hermite nodes/weights transformed to the standard normal measure;
// weights are renormalized to sum to exactly 1. Two-dimensional expectations
// are taken as the tensor product of this rule.
struct QuadratureGrid {
  Eigen::VectorXd nodes;    // standard-normal abscissae
  Eigen::VectorXd weights;  // sum to 1
  int order = 0;

  static QuadratureGrid gauss_hermite(int order);
};

}  // namespace hdlogit
