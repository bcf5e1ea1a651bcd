#include "hdlogit/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdlogit/rng.hpp"
#include "hdlogit/separability.hpp"

namespace hdlogit {

namespace {

std::vector<double> default_grid(double kappa0) {
  std::vector<double> grid;
  for (double k = kappa0 + 0.02; k <= 0.5 + 1e-12; k += 0.02) grid.push_back(k);
  return grid;
}

}  // namespace

ProbeResult probe(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ProbeConfig& cfg,
                  const FrontierCurve& curve) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const double kappa0 = static_cast<double>(p) / n;

  bool base_separable = false;
  try {
    base_separable = check_separable(X, y).separable;
  } catch (const IndeterminateSeparability&) {
    base_separable = false;
  }
  if (base_separable)
    throw ProbeError(ProbeError::Kind::already_separable,
                     "probe: data is completely separable; the MLE does not exist and gamma "
                     "cannot be estimated");

  std::vector<double> grid = cfg.kappa_grid.empty() ? default_grid(kappa0) : cfg.kappa_grid;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= kappa0)
      throw std::invalid_argument("probe: kappa_grid must start above the dataset's p/n");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw std::invalid_argument("probe: kappa_grid must be strictly increasing");
    if (grid[i] >= 0.55) throw std::invalid_argument("probe: kappa_grid must stay below 0.55");
  }
  if (cfg.resamples_per_kappa < 1)
    throw std::invalid_argument("probe: resamples_per_kappa must be >= 1");

  ProbeResult result;
  std::vector<int> base_index(static_cast<size_t>(n));
  std::iota(base_index.begin(), base_index.end(), 0);

  double iso = 0.0;  // running max of fractions (isotonic increase)
  double prev_kappa = kappa0, prev_iso = 0.0;
  bool crossed = false;

  for (size_t gi = 0; gi < grid.size() && !crossed; ++gi) {
    const double kp = grid[gi];
    const int sub_n = std::max(p + 1, static_cast<int>(std::lround(p / kp)));
    int sep = 0;
    for (int r = 0; r < cfg.resamples_per_kappa; ++r) {
      RngStream rng = RngStream::substream(cfg.seed, gi, static_cast<std::uint64_t>(r));
      // partial Fisher-Yates: first sub_n entries become the subsample
      std::vector<int> idx = base_index;
      for (int k = 0; k < sub_n; ++k)
        std::swap(idx[k], idx[k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - k)))]);
      Eigen::MatrixXd xs(sub_n, p);
      Eigen::VectorXd ys(sub_n);
      for (int k = 0; k < sub_n; ++k) {
        xs.row(k) = X.row(idx[static_cast<size_t>(k)]);
        ys(k) = y(idx[static_cast<size_t>(k)]);
      }
      bool is_sep = false;
      try {
        is_sep = check_separable(xs, ys).separable;
      } catch (const IndeterminateSeparability&) {
        is_sep = false;
      }
      if (is_sep) ++sep;
    }
    const double frac = static_cast<double>(sep) / cfg.resamples_per_kappa;
    result.kappas.push_back(kp);
    result.fractions.push_back(frac);

    prev_iso = iso;
    iso = std::max(iso, frac);
    if (iso >= cfg.crossing_target) {
      // linear interpolation between the previous grid point (below target)
      // and this one; the dataset itself (kappa0, fraction 0) brackets the
      // first grid point
      const double lo_k = prev_kappa, lo_f = prev_iso;
      const double t = (cfg.crossing_target - lo_f) / (iso - lo_f);
      result.kappa_hat = lo_k + t * (kp - lo_k);
      crossed = true;
    }
    prev_kappa = kp;
  }

  if (!crossed)
    throw ProbeError(ProbeError::Kind::grid_exhausted,
                     "probe: separability fraction never reached the crossing target; extend "
                     "kappa_grid");
  result.gamma_hat = curve.gamma_at(result.kappa_hat);
  return result;
}

FixedPoint estimate_theory_params(double kappa, double gamma_hat) {
  return solve_fixed_point({kappa, gamma_hat});
}

}  // namespace hdlogit
