#include "hdlogit/fixed_point.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "hdlogit/link.hpp"

namespace hdlogit {

Eigen::Vector3d system_residuals(double alpha, double sigma, double lambda,
                                 const TheoryInputs& in, const QuadratureGrid& grid) {
  if (grid.order < 8) throw std::invalid_argument("system_residuals: quadrature order below 8");
  if (!(alpha > 0.0 && sigma > 0.0 && lambda > 0.0))
    throw std::invalid_argument("system_residuals: parameters must be positive");
  const double kappa = in.kappa, gamma = in.gamma;
  const int m = grid.order;

  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  const double c2 = std::sqrt(kappa) * sigma;
  for (int i = 0; i < m; ++i) {
    const double z1 = grid.nodes(i);
    const double q1 = gamma * z1;
    const double wi = grid.weights(i);
    const double a = 2.0 * rho_prime(q1);
    const double c = rho_prime(q1) * q1;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int j = 0; j < m; ++j) {
      const double q2 = -alpha * gamma * z1 + c2 * grid.nodes(j);
      const double pr = prox_logistic(lambda, q2);
      const double lrp = lambda * rho_prime(pr);
      const double wj = grid.weights(j);
      s1 += wj * lrp * lrp;
      s2 += wj * lrp;
      s3 += wj / (1.0 + lambda * rho_second(pr));
    }
    e1 += wi * a * s1;
    e2 += wi * c * s2;
    e3 += wi * a * s3;
  }
  Eigen::Vector3d r;
  r(0) = sigma * sigma - e1 / (kappa * kappa);
  r(1) = -e2;
  r(2) = (1.0 - kappa) - e3;
  return r;
}

namespace {

const QuadratureGrid& default_grid(int order) {
  static std::mutex mu;
  static std::unordered_map<int, QuadratureGrid> grids;
  std::lock_guard<std::mutex> lock(mu);
  auto it = grids.find(order);
  if (it == grids.end()) it = grids.emplace(order, QuadratureGrid::gauss_hermite(order)).first;
  return it->second;
}

// Newton with forward-difference Jacobian and step halving; r(1) is solved in
// the form r1/gamma^2, which stays O(1) as gamma -> 0.
struct ScaledSystem {
  TheoryInputs in;
  const QuadratureGrid* grid;
  double gamma2_floor;

  Eigen::Vector3d operator()(const Eigen::Vector3d& x) const {
    Eigen::Vector3d r = system_residuals(x(0), x(1), x(2), in, *grid);
    r(1) /= gamma2_floor;
    return r;
  }
};

FixedPoint solve_null_case(double kappa, const QuadratureGrid& grid, const SolveOptions& opts) {
  // gamma = 0: Q1 == 0 makes the second equation vanish identically and the
  // first/third reduce to one-dimensional expectations over Q2 = sqrt(k)s Z.
  // alpha is recovered from the gamma->0 limit of the second equation:
  //   alpha = E[rho'(prox)] / (2 E[rho''(prox) / (1 + lambda rho''(prox))]).
  const int m = grid.order;
  double sigma = 1.0, lambda = 1.0;

  auto residuals2 = [&](double s, double l, double& r1, double& r3) {
    double e1 = 0.0, e3 = 0.0;
    const double c = std::sqrt(kappa) * s;
    for (int j = 0; j < m; ++j) {
      const double pr = prox_logistic(l, c * grid.nodes(j));
      const double lrp = l * rho_prime(pr);
      e1 += grid.weights(j) * lrp * lrp;
      e3 += grid.weights(j) / (1.0 + l * rho_second(pr));
    }
    r1 = s * s - e1 / (kappa * kappa);
    r3 = (1.0 - kappa) - e3;
  };

  double r1, r3;
  residuals2(sigma, lambda, r1, r3);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (std::max(std::fabs(r1), std::fabs(r3)) <= opts.tol) break;
    const double hs = 1e-6 * std::max(1.0, sigma), hl = 1e-6 * std::max(1.0, lambda);
    double r1s, r3s, r1l, r3l;
    residuals2(sigma + hs, lambda, r1s, r3s);
    residuals2(sigma, lambda + hl, r1l, r3l);
    Eigen::Matrix2d jac;
    jac << (r1s - r1) / hs, (r1l - r1) / hl, (r3s - r3) / hs, (r3l - r3) / hl;
    const Eigen::Vector2d step = jac.partialPivLu().solve(Eigen::Vector2d(-r1, -r3));
    double t = 1.0;
    const double base = std::hypot(r1, r3);
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      const double s_new = sigma + t * step(0), l_new = lambda + t * step(1);
      if (s_new <= 0.0 || l_new <= 0.0) continue;
      double r1n, r3n;
      residuals2(s_new, l_new, r1n, r3n);
      if (std::hypot(r1n, r3n) < base) {
        sigma = s_new;
        lambda = l_new;
        r1 = r1n;
        r3 = r3n;
        break;
      }
    }
  }
  if (std::max(std::fabs(r1), std::fabs(r3)) > opts.tol)
    throw std::runtime_error("solve_fixed_point: no convergence at gamma=0");

  double num = 0.0, den = 0.0;
  const double c = std::sqrt(kappa) * sigma;
  for (int j = 0; j < m; ++j) {
    const double pr = prox_logistic(lambda, c * grid.nodes(j));
    const double rs = rho_second(pr);
    num += grid.weights(j) * rho_prime(pr);
    den += grid.weights(j) * rs / (1.0 + lambda * rs);
  }
  FixedPoint fp;
  fp.alpha = 0.5 * num / den;
  fp.sigma = sigma;
  fp.lambda = lambda;
  fp.inputs = {kappa, 0.0};
  fp.residuals = system_residuals(fp.alpha, fp.sigma, fp.lambda, fp.inputs, grid);
  return fp;
}

struct CacheKey {
  long long k, g;
  int order;
  bool operator==(const CacheKey&) const = default;
};
struct CacheKeyHash {
  size_t operator()(const CacheKey& c) const {
    size_t h = std::hash<long long>()(c.k);
    h ^= std::hash<long long>()(c.g) + 0x9e3779b9u + (h << 6) + (h >> 2);
    h ^= std::hash<int>()(c.order) + 0x9e3779b9u + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace

FixedPoint solve_fixed_point(const TheoryInputs& in, const SolveOptions& opts) {
  if (!(in.kappa > 0.0 && in.kappa < 1.0))
    throw std::invalid_argument("solve_fixed_point: kappa must be in (0,1)");
  if (!(in.gamma >= 0.0)) throw std::invalid_argument("solve_fixed_point: gamma must be >= 0");

  static std::mutex cache_mu;
  static std::unordered_map<CacheKey, FixedPoint, CacheKeyHash> cache;
  const CacheKey key{std::llround(in.kappa * 1e6), std::llround(in.gamma * 1e6),
                     opts.quadrature_order};
  {
    std::lock_guard<std::mutex> lock(cache_mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }

  const QuadratureGrid& grid = default_grid(opts.quadrature_order);
  FixedPoint fp;
  if (in.gamma == 0.0) {
    fp = solve_null_case(in.kappa, grid, opts);
  } else {
    const ScaledSystem sys{in, &grid, std::max(in.gamma * in.gamma, 1e-4)};
    Eigen::Vector3d x(1.0 + in.kappa, 1.0 + in.gamma, 1.0);
    Eigen::Vector3d r = sys(x);
    bool ok = false;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
      const Eigen::Vector3d raw = system_residuals(x(0), x(1), x(2), in, grid);
      if (raw.cwiseAbs().maxCoeff() <= opts.tol && r.cwiseAbs().maxCoeff() <= opts.tol) {
        ok = true;
        break;
      }
      Eigen::Matrix3d jac;
      for (int k = 0; k < 3; ++k) {
        const double h = 1e-6 * std::max(1.0, std::fabs(x(k)));
        Eigen::Vector3d xp = x;
        xp(k) += h;
        jac.col(k) = (sys(xp) - r) / h;
      }
      const Eigen::Vector3d step = jac.partialPivLu().solve(-r);
      double t = 1.0;
      bool moved = false;
      for (int half = 0; half < 40; ++half, t *= 0.5) {
        const Eigen::Vector3d xn = x + t * step;
        if (xn.minCoeff() <= 0.0) continue;
        const Eigen::Vector3d rn = sys(xn);
        if (rn.norm() < r.norm()) {
          x = xn;
          r = rn;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (!ok)
      throw std::runtime_error(
          "solve_fixed_point: no convergence; check that (kappa, gamma) lies below the MLE "
          "existence frontier");
    fp.alpha = x(0);
    fp.sigma = x(1);
    fp.lambda = x(2);
    fp.inputs = in;
    fp.residuals = system_residuals(fp.alpha, fp.sigma, fp.lambda, in, grid);
  }

  std::lock_guard<std::mutex> lock(cache_mu);
  cache.emplace(key, fp);
  return fp;
}

}  // namespace hdlogit
