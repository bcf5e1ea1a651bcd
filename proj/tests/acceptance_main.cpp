// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Long-running; sized so the statistical windows hold at the stated
// replication counts. Select criteria with --criteria 1,2,...; --threads N
// controls the worker pool.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hdlogit/covariance.hpp"
#include "hdlogit/fixed_point.hpp"
#include "hdlogit/frontier.hpp"
#include "hdlogit/harness.hpp"
#include "hdlogit/inference.hpp"
#include "hdlogit/link.hpp"
#include "hdlogit/logistic.hpp"
#include "hdlogit/probe.hpp"
#include "hdlogit/quadrature.hpp"
#include "hdlogit/rng.hpp"
#include "hdlogit/separability.hpp"
#include "hdlogit/special.hpp"

using namespace hdlogit;
namespace fs = std::filesystem;

namespace {

int g_threads = 0;

int threads() {
  if (g_threads > 0) return g_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << std::fixed << x;
  return ss.str();
}

ExperimentConfig paper_protocol(const std::string& mode, int replicates, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.n = 4000;
  cfg.p = 800;
  cfg.covariance.kind = CovKind::ar1;
  cfg.covariance.p = 800;
  cfg.covariance.rho = 0.5;
  cfg.scheme = BetaScheme::half_nonnull_equal;
  cfg.gamma2 = 5.0;
  cfg.replicates = replicates;
  cfg.seed = seed;
  cfg.threads = threads();
  cfg.warm_start = true;
  return cfg;
}

// ---------------------------------------------------------------- criterion 1
Outcome criterion_fixed_point() {
  Outcome out;
  const QuadratureGrid grid = QuadratureGrid::gauss_hermite(80);
  const std::pair<double, double> points[] = {{0.1, 1.0}, {0.2, 5.0}, {0.3, 2.0}};
  std::ostringstream detail;
  for (const auto& [kappa, gamma2] : points) {
    const auto t0 = std::chrono::steady_clock::now();
    const TheoryInputs in{kappa, std::sqrt(gamma2)};
    const FixedPoint fp = solve_fixed_point(in);
    const double runtime = elapsed_s(t0);
    const double res = fp.residuals.cwiseAbs().maxCoeff();

    // re-solve from a x1.5 perturbed start with a local Newton loop
    Eigen::Vector3d x(1.5 * fp.alpha, 1.5 * fp.sigma, 1.5 * fp.lambda);
    for (int iter = 0; iter < 200; ++iter) {
      const Eigen::Vector3d r = system_residuals(x(0), x(1), x(2), in, grid);
      if (r.cwiseAbs().maxCoeff() <= 1e-9) break;
      Eigen::Matrix3d jac;
      for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d xp = x;
        const double h = 1e-6 * std::max(1.0, std::fabs(x(k)));
        xp(k) += h;
        jac.col(k) = (system_residuals(xp(0), xp(1), xp(2), in, grid) - r) / h;
      }
      Eigen::Vector3d step = jac.partialPivLu().solve(-r);
      double t = 1.0;
      while ((x + t * step).minCoeff() <= 0.0) t *= 0.5;
      x += t * step;
    }
    const double agree = (x - Eigen::Vector3d(fp.alpha, fp.sigma, fp.lambda)).cwiseAbs().maxCoeff();

    const bool ok = res <= 1e-6 && fp.alpha > 1.0 && agree <= 1e-4 && runtime <= 5.0;
    out.pass = out.pass && ok;
    detail << " (k=" << kappa << ",g2=" << gamma2 << "): alpha=" << fmt(fp.alpha)
           << " sigma=" << fmt(fp.sigma) << " lambda=" << fmt(fp.lambda) << " res=" << res
           << " restart_diff=" << agree << " t=" << fmt(runtime, 2) << "s;";
  }
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- criterion 2
Outcome criterion_lemma31() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult res =
      run_convergence_check(0.2, std::sqrt(5.0), 4000, 200, 31, threads(), true);
  const double wall = elapsed_s(t0);
  const double alpha_err =
      std::fabs(res.scalars.at("alpha_n_mean") / res.scalars.at("alpha_star") - 1.0);
  const double sigma_err =
      std::fabs(res.scalars.at("sigma_n2_mean") / res.scalars.at("kappa_sigma_star2") - 1.0);
  const double core_s = wall * std::min(threads(), 8);
  out.pass = alpha_err <= 0.02 && sigma_err <= 0.05 && core_s <= 15.0 * 60.0 * 8.0;
  out.detail = "mean alpha(n)=" + fmt(res.scalars.at("alpha_n_mean")) +
               " vs alpha*=" + fmt(res.scalars.at("alpha_star")) + " (" + fmt(100 * alpha_err, 2) +
               "%), mean sigma(n)^2=" + fmt(res.scalars.at("sigma_n2_mean")) +
               " vs kappa sigma*^2=" + fmt(res.scalars.at("kappa_sigma_star2")) + " (" +
               fmt(100 * sigma_err, 2) + "%), " + std::to_string(res.separable_skipped) +
               " separable skipped, wall=" + fmt(wall, 1) + "s";
  return out;
}

// ---------------------------------------------------------------- criterion 3
Outcome criterion_table1() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = paper_protocol("marginal", 5000, 103);
  const ExperimentResult res = run_marginal(cfg);
  const double wall = elapsed_s(t0);

  const std::vector<std::pair<double, double>> targets = {
      {0.99, 0.9897}, {0.95, 0.9499}, {0.90, 0.8988}, {0.80, 0.7988}};
  std::ostringstream detail;
  for (const auto& [level, target] : targets) {
    double prop = -1.0;
    for (const auto& row : res.coverage)
      if (std::fabs(row.level - level) < 1e-9) prop = row.proportion;
    const double se = std::sqrt(target * (1.0 - target) / 5000.0);
    const bool ok = prop >= target - 3.0 * se && prop <= target + 3.0 * se;
    out.pass = out.pass && ok;
    detail << " " << fmt(100 * level, 0) << "%: " << fmt(100 * prop, 2) << " (target "
           << fmt(100 * target, 2) << " +/- " << fmt(300 * se, 2) << ")" << (ok ? "" : " FAIL")
           << ";";
  }
  // QQ band on the central 98%: empirical vs theoretical quantiles of T_j
  double qq_dev = 0.0;
  const size_t m = res.qq.size();
  for (size_t i = 0; i < m; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    if (q < 0.01 || q > 0.99) continue;
    qq_dev = std::max(qq_dev, std::fabs(res.qq[i].first - res.qq[i].second));
  }
  const bool ok_qq = qq_dev <= 0.1;
  out.pass = out.pass && ok_qq;
  detail << " qq_dev(central 98%)=" << fmt(qq_dev, 3) << (ok_qq ? "" : " FAIL (want <= 0.1)")
         << ";";

  if (res.flagged) out.pass = false;
  detail << " skipped=" << res.separable_skipped << " wall=" << fmt(wall / 60.0, 1) << "min";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- criterion 4
Outcome criterion_table2() {
  Outcome out;
  std::ostringstream detail;
  for (const bool identity : {false, true}) {
    ExperimentConfig cfg = paper_protocol("bulk", 500, 104);
    if (identity) {
      cfg.covariance.kind = CovKind::identity;
      cfg.covariance.rho = 0.0;
    }
    const ExperimentResult res = run_bulk(cfg);
    double mean95 = -1.0;
    for (const auto& row : res.coverage)
      if (std::fabs(row.level - 0.95) < 1e-9) mean95 = row.proportion;
    const bool ok = mean95 >= 0.943 && mean95 <= 0.953;
    out.pass = out.pass && ok;
    detail << (identity ? " identity" : " ar1(0.5)") << ": mean 95% fraction = "
           << fmt(100 * mean95, 3) << (ok ? "" : " FAIL (want [94.3, 95.3])") << ";";
  }
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- criterion 5
Outcome criterion_table3() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = paper_protocol("pvalue", 5000, 105);
  cfg.parameter_mode = ParameterMode::true_params;
  cfg.tau_mode = TauMode::true_tau;
  cfg.outputs = {"t_adj", "wald"};
  const ExperimentResult res = run_pvalue_study(cfg);
  const double wall = elapsed_s(t0);

  double t_adj_5 = -1.0, wald_5 = -1.0;
  for (const auto& t : res.tails) {
    for (size_t c = 0; c < t.cutoffs.size(); ++c) {
      if (std::fabs(t.cutoffs[c] - 0.05) > 1e-12) continue;
      if (t.statistic == "t_adj") t_adj_5 = t.proportions[c];
      if (t.statistic == "wald") wald_5 = t.proportions[c];
    }
  }
  const bool ok_adj = t_adj_5 >= 0.043 && t_adj_5 <= 0.062;
  const bool ok_wald = wald_5 >= 0.085;
  out.pass = ok_adj && ok_wald && !res.flagged;
  out.detail = "adjusted-t P(p<=5%)=" + fmt(100 * t_adj_5, 2) + "% (want [4.3, 6.2])" +
               (ok_adj ? "" : " FAIL") + ", classical Wald P(p<=5%)=" + fmt(100 * wald_5, 2) +
               "% (want >= 8.5)" + (ok_wald ? "" : " FAIL") + ", wall=" + fmt(wall / 60.0, 1) +
               "min";
  return out;
}

// ---------------------------------------------------------------- criterion 6
Outcome criterion_table5() {
  Outcome out;
  ExperimentConfig cfg = paper_protocol("pvalue", 2000, 106);
  cfg.parameter_mode = ParameterMode::true_params;
  cfg.outputs = {"lrt_rescaled"};
  const ExperimentResult res = run_pvalue_study(cfg);

  const TailTable& t = res.tails.front();
  double p10 = -1.0;
  for (size_t c = 0; c < t.cutoffs.size(); ++c)
    if (std::fabs(t.cutoffs[c] - 0.10) < 1e-12) p10 = t.proportions[c];

  // one-sample KS of the p-values against U(0,1): identical to testing the
  // rescaled statistic against chi-squared(1)
  const std::vector<double>& pv = t.pvalues_sorted;
  const double m = static_cast<double>(pv.size());
  double d = 0.0;
  for (size_t i = 0; i < pv.size(); ++i) {
    d = std::max(d, pv[i] - static_cast<double>(i) / m);
    d = std::max(d, static_cast<double>(i + 1) / m - pv[i]);
  }
  const double d_crit = 1.6276 / std::sqrt(m);  // asymptotic 1% critical value

  const bool ok_tail = p10 >= 0.085 && p10 <= 0.115;
  const bool ok_ks = d <= d_crit;
  out.pass = ok_tail && ok_ks && !res.flagged;
  out.detail = "rescaled-LRT P(p<=10%)=" + fmt(100 * p10, 2) + "% (want [8.5, 11.5])" +
               (ok_tail ? "" : " FAIL") + ", KS D=" + fmt(d, 4) + " vs crit " + fmt(d_crit, 4) +
               (ok_ks ? "" : " FAIL");
  return out;
}

// ---------------------------------------------------------------- criterion 7
FrontierCurve acceptance_frontier();

Outcome criterion_probefrontier() {
  Outcome out;
  const FrontierCurve curve = acceptance_frontier();
  // the experiment's own operating point must sit inside the existence region
  if (!exists_mle({0.2, std::sqrt(5.0)}, curve) || exists_mle({0.2, 100.0}, curve)) {
    out.pass = false;
    out.detail = "frontier curve misplaces (kappa=0.2, gamma^2=5)";
    return out;
  }
  const CovarianceSpec spec = build_ar1(800, 0.5);

  std::vector<double> gamma2_hats(20);
  std::vector<int8_t> failed(20, 0);
  {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int s = next.fetch_add(1);
        if (s >= 20) return;
        RngStream rng = RngStream::substream(107, static_cast<std::uint64_t>(s));
        const Eigen::VectorXd beta = make_beta(BetaScheme::half_nonnull_equal, spec, 5.0, rng);
        const DesignMatrix d = sample_design(4000, spec, rng);
        Eigen::VectorXd y(4000);
        for (int i = 0; i < 4000; ++i)
          y(i) = rng.uniform() < rho_prime(d.x.row(i).dot(beta)) ? 1.0 : -1.0;
        ProbeConfig pc;
        pc.seed = RngStream::substream(108, static_cast<std::uint64_t>(s)).next_u64();
        try {
          const ProbeResult pres = probe(d.x, y, pc, curve);
          gamma2_hats[static_cast<size_t>(s)] = pres.gamma_hat * pres.gamma_hat;
        } catch (const std::exception&) {
          failed[static_cast<size_t>(s)] = 1;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads(); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> errs, oks;
  for (int s = 0; s < 20; ++s) {
    if (failed[static_cast<size_t>(s)]) continue;
    oks.push_back(gamma2_hats[static_cast<size_t>(s)]);
    errs.push_back(std::fabs(gamma2_hats[static_cast<size_t>(s)] - 5.0) / 5.0);
  }
  std::sort(errs.begin(), errs.end());
  std::sort(oks.begin(), oks.end());
  const double median_err = errs.empty() ? 1.0 : errs[errs.size() / 2];
  const double median_g2 = oks.empty() ? 0.0 : oks[oks.size() / 2];
  const bool ok_accuracy = errs.size() == 20 && median_err <= 0.25;

  // downstream Table-3-column-1 calibration with the probe's plug-in gamma
  // and per-replicate RSS tau
  ExperimentConfig cfg = paper_protocol("pvalue", 2000, 109);
  cfg.parameter_mode = ParameterMode::probefrontier;
  cfg.tau_mode = TauMode::rss;
  cfg.gamma_hat = std::sqrt(median_g2);
  cfg.outputs = {"t_adj"};
  const ExperimentResult res = run_pvalue_study(cfg);
  double p5 = -1.0;
  for (size_t c = 0; c < res.tails[0].cutoffs.size(); ++c)
    if (std::fabs(res.tails[0].cutoffs[c] - 0.05) < 1e-12) p5 = res.tails[0].proportions[c];
  const bool ok_calib = p5 >= 0.052 - 0.015 && p5 <= 0.052 + 0.015;

  out.pass = ok_accuracy && ok_calib;
  out.detail = "median gamma2_hat=" + fmt(median_g2, 3) + ", median rel err=" +
               fmt(100 * median_err, 1) + "% (want <= 25%)" + (ok_accuracy ? "" : " FAIL") +
               "; estimated-parameter P(p<=5%)=" + fmt(100 * p5, 2) +
               "% (want 5.20 +/- 1.5)" + (ok_calib ? "" : " FAIL");
  return out;
}

// ---------------------------------------------------------------- criterion 8
Outcome criterion_properties() {
  Outcome out;
  std::ostringstream detail;

  // prox stationarity on 10^3 random pairs
  {
    RngStream rng(81);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double lambda = 5.0 * rng.uniform();
      const double z = 20.0 * (rng.uniform() - 0.5);
      const double t = prox_logistic(lambda, z);
      worst = std::max(worst, std::fabs(lambda * rho_prime(t) + t - z));
    }
    const bool ok = worst <= 1e-12;
    out.pass = out.pass && ok;
    detail << " prox residual " << worst << (ok ? "" : " FAIL") << ";";
  }

  // quadrature moment identities
  {
    const QuadratureGrid g = QuadratureGrid::gauss_hermite(40);
    double worst = std::fabs(g.weights.sum() - 1.0);
    double m1 = 0, m2 = 0;
    for (int i = 0; i < g.order; ++i) {
      m1 += g.weights(i) * g.nodes(i);
      m2 += g.weights(i) * g.nodes(i) * g.nodes(i);
    }
    worst = std::max({worst, std::fabs(m1), std::fabs(m2 - 1.0)});
    double cross = 0;
    for (int i = 0; i < g.order; ++i)
      for (int j = 0; j < g.order; ++j)
        cross += g.weights(i) * g.weights(j) * g.nodes(i) * g.nodes(j);
    worst = std::max(worst, std::fabs(cross));
    const bool ok = worst <= 1e-10;
    out.pass = out.pass && ok;
    detail << " quadrature moments " << worst << (ok ? "" : " FAIL") << ";";
  }

  // gradient vs central finite differences, 10 random directions
  {
    RngStream rng(82);
    double worst = 0.0;
    const int n = 50, p = 15;
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform() < 0.5 ? 1.0 : -1.0;
    y(0) = 1.0;
    y(1) = -1.0;
    Eigen::VectorXd b(p);
    for (int j = 0; j < p; ++j) b(j) = 0.4 * rng.normal();
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    grad_hess(b, x, y, grad, hess);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd v(p);
      for (int j = 0; j < p; ++j) v(j) = rng.normal();
      v.normalize();
      const double h = 1e-5;
      const double fd = (log_likelihood(b + h * v, x, y) - log_likelihood(b - h * v, x, y)) / (2 * h);
      worst = std::max(worst, std::fabs(grad.dot(v) - fd) / std::max(1.0, std::fabs(fd)));
    }
    const bool ok = worst <= 1e-5;
    out.pass = out.pass && ok;
    detail << " grad-vs-fd " << worst << (ok ? "" : " FAIL") << ";";
  }

  // MLE equivariance and LLR invariance under the Cholesky reparametrization
  {
    RngStream rng(83);
    const int n = 300, p = 8;
    const CovarianceSpec spec = build_ar1(p, 0.5);
    const DesignMatrix d = sample_design(n, spec, rng);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta(0) = 1.0;
    beta(3) = -0.5;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
      y(i) = rng.uniform() < rho_prime(d.x.row(i).dot(beta)) ? 1.0 : -1.0;
    const Eigen::MatrixXd xt =
        spec.chol.triangularView<Eigen::Lower>().transpose().solve<Eigen::OnTheRight>(d.x);
    const FitResult f1 = fit_mle(d.x, y);
    const FitResult f2 = fit_mle(xt, y);
    const double equiv = f1.converged && f2.converged
                             ? (spec.chol.transpose() * f1.beta_hat - f2.beta_hat)
                                   .cwiseAbs()
                                   .maxCoeff()
                             : 1.0;
    const double llr_diff = std::fabs(llr(d.x, y, {p - 1}) - llr(xt, y, {p - 1}));
    const bool ok = equiv <= 1e-5 && llr_diff <= 1e-6;
    out.pass = out.pass && ok;
    detail << " equivariance " << equiv << ", llr invariance " << llr_diff << (ok ? "" : " FAIL")
           << ";";
  }

  // sphere uniformity at designated coordinates
  {
    const int reps = 400;
    const ExperimentResult res = run_sphere_check(0.2, 1.0, 1000, reps, 84, threads());
    const double bound = 3.0 / std::sqrt(static_cast<double>(res.replicates_used));
    const double worst = std::max({std::fabs(res.scalars.at("mean_sqrtp_u1")),
                                   std::fabs(res.scalars.at("mean_sqrtp_u2")),
                                   std::fabs(res.scalars.at("mean_sqrtp_u3"))});
    const bool ok = worst <= bound && res.scalars.at("max_norm_error") <= 1e-12 &&
                    std::fabs(res.scalars.at("corr_u2_u3")) <= bound;
    out.pass = out.pass && ok;
    detail << " sphere means " << fmt(worst, 4) << " (bound " << fmt(bound, 4) << ")"
           << (ok ? "" : " FAIL") << ";";
  }

  // tau oracle agreement at the paper's operating size
  {
    RngStream rng(85);
    const CovarianceSpec id = make_identity(800);
    const DesignMatrix d = sample_design(4000, id, rng);
    const double mean_tau = estimate_tau_rss_all(d.x).mean();
    RngStream rng2(86);
    const CovarianceSpec ar = build_ar1(800, 0.5);
    const DesignMatrix d2 = sample_design(4000, ar, rng2);
    const double tau2 = std::pow(estimate_tau_rss(d2.x, 400), 2);
    const bool ok = std::fabs(mean_tau - 1.0) <= 0.02 && std::fabs(tau2 - 0.6) <= 0.05;
    out.pass = out.pass && ok;
    detail << " tau oracles: identity mean " << fmt(mean_tau, 4) << ", ar1 interior tau^2 "
           << fmt(tau2, 4) << (ok ? "" : " FAIL") << ";";
  }

  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- criterion 9
Outcome criterion_determinism() {
  Outcome out;
  ExperimentConfig cfg;
  cfg.mode = "marginal";
  cfg.n = 600;
  cfg.p = 60;
  cfg.covariance.kind = CovKind::ar1;
  cfg.covariance.p = 60;
  cfg.covariance.rho = 0.5;
  cfg.scheme = BetaScheme::half_nonnull_equal;
  cfg.gamma2 = 2.0;
  cfg.replicates = 100;
  cfg.seed = 90;
  cfg.threads = 1;
  const ExperimentResult a = run_marginal(cfg);
  cfg.threads = std::max(2, threads());
  const ExperimentResult b = run_marginal(cfg);
  const bool same = result_csv(a) == result_csv(b) && qq_csv(a) == qq_csv(b) &&
                    result_json(a, cfg) == result_json(b, cfg);
  out.pass = same;
  out.detail = same ? "1-thread and " + std::to_string(cfg.threads) +
                          "-thread runs byte-identical (CSV, QQ, JSON)"
                    : "outputs differ across thread counts";
  return out;
}

// --------------------------------------------------------------- criterion 10
Outcome criterion_subsample() {
  Outcome out;
  const std::vector<double> kappas = {0.1, 0.18, 0.26};
  const int seeds = 20, b = 25;
  std::vector<int8_t> increasing(seeds, 0);

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int s = next.fetch_add(1);
      if (s >= seeds) return;
      RngStream rng = RngStream::substream(1000, static_cast<std::uint64_t>(s));
      const int n = 3000, p = 300;
      const CovarianceSpec spec = make_identity(p);
      const Eigen::VectorXd beta = make_beta(BetaScheme::half_nonnull_equal, spec, 5.0, rng);
      const DesignMatrix d = sample_design(n, spec, rng);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i)
        y(i) = rng.uniform() < rho_prime(d.x.row(i).dot(beta)) ? 1.0 : -1.0;
      int var_idx = 0;
      for (int j = 0; j < p; ++j)
        if (beta(j) != 0.0) {
          var_idx = j;
          break;
        }
      const SubsampleStudy study = run_subsample_study(
          d.x, y, var_idx, kappas, b, RngStream::substream(1001, static_cast<std::uint64_t>(s)).next_u64());
      std::vector<double> medians;
      for (double k : kappas) {
        std::vector<double> mags;
        for (const auto& row : study.rows)
          if (row.kappa == k) mags.push_back(std::fabs(row.beta_hat));
        std::sort(mags.begin(), mags.end());
        medians.push_back(mags.empty() ? 0.0 : mags[mags.size() / 2]);
      }
      increasing[static_cast<size_t>(s)] =
          (medians.size() == 3 && medians[0] < medians[1] && medians[1] < medians[2]) ? 1 : 0;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads(); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  int count = 0;
  for (int s = 0; s < seeds; ++s) count += increasing[static_cast<size_t>(s)];
  out.pass = count >= 18;
  out.detail = "median |beta_hat| strictly increasing across kappa in " + std::to_string(count) +
               "/20 seeds (want >= 18)";
  return out;
}

FrontierCurve acceptance_frontier() {
#ifdef HDLOGIT_SOURCE_DIR
  const fs::path committed = fs::path(HDLOGIT_SOURCE_DIR) / "data" / "frontier_default.json";
#else
  const fs::path committed = fs::path("data") / "frontier_default.json";
#endif
  if (fs::exists(committed)) return load_frontier(committed.string());
  std::cerr << "acceptance: no committed frontier cache; building one (slow, one-time)\n";
  FrontierBuildOptions opts;
  opts.n = 2000;
  opts.reps = 300;
  opts.threads = threads();
  opts.verbose = true;
  std::vector<double> grid;
  for (double k = 0.10; k <= 0.501; k += 0.02) grid.push_back(k);
  const FrontierCurve curve = build_frontier(grid, 20240808, opts);
  fs::create_directories(committed.parent_path());
  save_frontier(curve, committed.string());
  return curve;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) {
    if (std::strcmp(argv[a], "--threads") == 0 && a + 1 < argc) {
      g_threads = std::atoi(argv[++a]);
    } else if (std::strcmp(argv[a], "--criteria") == 0 && a + 1 < argc) {
      std::stringstream ss(argv[++a]);
      std::string tok;
      while (std::getline(ss, tok, ',')) selected.push_back(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--threads N] [--criteria 1,2,...]\n";
      return 64;
    }
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "fixed-point solver residuals, uniqueness, runtime", criterion_fixed_point},
      {2, "alpha(n), sigma(n)^2 consistency oracle (200 reps at n=4000)", criterion_lemma31},
      {3, "single-coordinate coverage (B=5000)", criterion_table1},
      {4, "bulk coverage, ar1(0.5) and identity (B=500)", criterion_table2},
      {5, "t-test calibration: adjusted vs classical (B=5000)", criterion_table3},
      {6, "rescaled LRT calibration and KS (B=2000)", criterion_table5},
      {7, "ProbeFrontier accuracy and downstream calibration", criterion_probefrontier},
      {8, "property suites", criterion_properties},
      {9, "determinism across thread counts", criterion_determinism},
      {10, "subsample-study synthetic validation (20 seeds)", criterion_subsample},
  };

  int failures = 0;
  for (const auto& e : entries) {
    if (std::find(selected.begin(), selected.end(), e.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out.pass = false;
      out.detail = std::string("exception: ") + ex.what();
    }
    const double wall = elapsed_s(t0);
    std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << "criterion " << e.id << " (" << e.name
              << "): " << out.detail << " [" << fmt(wall, 1) << "s]" << std::endl;
    if (!out.pass) ++failures;
  }
  return failures;
}
