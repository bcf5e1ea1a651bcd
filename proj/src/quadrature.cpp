#include "hdlogit/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace hdlogit {

// Golub-Welsch: eigen-decompose the Jacobi matrix of the (physicists')
// Hermite recurrence, then map x -> sqrt(2) x to the N(0,1) measure.
QuadratureGrid QuadratureGrid::gauss_hermite(int order) {
  if (order < 2) throw std::invalid_argument("gauss_hermite: order must be >= 2");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(0.5 * static_cast<double>(k));
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigensolver failed");

  QuadratureGrid grid;
  grid.order = order;
  grid.nodes = es.eigenvalues() * std::sqrt(2.0);
  grid.weights.resize(order);
  for (int k = 0; k < order; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    grid.weights(k) = v0 * v0;  // physicists' weight / sqrt(pi)
  }
  grid.weights /= grid.weights.sum();
  return grid;
}

}  // namespace hdlogit
