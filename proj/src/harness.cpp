#include "hdlogit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hdlogit/csv.hpp"
#include "hdlogit/inference.hpp"
#include "hdlogit/link.hpp"
#include "hdlogit/logistic.hpp"
#include "hdlogit/probe.hpp"
#include "hdlogit/separability.hpp"
#include "hdlogit/special.hpp"

namespace hdlogit {

CovarianceSpec build_covariance(const CovDescriptor& d) {
  switch (d.kind) {
    case CovKind::identity:
      return make_identity(d.p);
    case CovKind::ar1:
      return build_ar1(d.p, d.rho);
    case CovKind::random_correlation: {
      RngStream rng(d.seed);
      return build_random_correlation(d.p, d.df, rng);
    }
    case CovKind::explicit_matrix:
      return make_explicit(load_matrix_csv(d.path));
  }
  throw std::logic_error("build_covariance: unreachable");
}

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Run body(replicate_index) on a worker pool. Replicates pull indices from a
// shared counter; all output must go to per-replicate slots so the result is
// independent of scheduling.
void parallel_replicates(int replicates, int threads, const std::function<void(int)>& body) {
  threads = std::min(resolve_threads(threads), replicates);
  if (threads <= 1) {
    for (int r = 0; r < replicates; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= replicates) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double binomial_se(double phat, int b) {
  return std::sqrt(std::max(0.0, phat * (1.0 - phat)) / static_cast<double>(b));
}

// Support order for beta construction and tracked-coordinate selection:
// a seeded shuffle of 0..p-1; the first half is the support.
std::vector<int> shuffled_order(int p, RngStream& rng) {
  std::vector<int> order(static_cast<size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  for (int k = p - 1; k > 0; --k)
    std::swap(order[static_cast<size_t>(k)],
              order[static_cast<size_t>(rng.below(static_cast<std::uint64_t>(k) + 1))]);
  return order;
}

Eigen::VectorXd beta_from_order(BetaScheme scheme, const CovarianceSpec& spec, double gamma2,
                                const std::vector<int>& order) {
  const int p = spec.p;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  switch (scheme) {
    case BetaScheme::zero:
      return beta;
    case BetaScheme::single_spike: {
      if (gamma2 > 0.0) beta(0) = std::sqrt(gamma2 / spec.sigma(0, 0));
      return beta;
    }
    case BetaScheme::half_nonnull_equal: {
      if (gamma2 == 0.0) return beta;
      const int support = p / 2;
      Eigen::VectorXd ones_s = Eigen::VectorXd::Zero(p);
      for (int k = 0; k < support; ++k) ones_s(order[static_cast<size_t>(k)]) = 1.0;
      const double quad = ones_s.dot(spec.sigma.selfadjointView<Eigen::Lower>() * ones_s);
      const double m = std::sqrt(gamma2 / quad);
      beta = m * ones_s;
      return beta;
    }
    case BetaScheme::explicit_vec:
      throw std::invalid_argument("beta_from_order: explicit scheme needs a vector");
  }
  throw std::logic_error("beta_from_order: unreachable");
}

struct Protocol {
  CovarianceSpec spec;
  Eigen::VectorXd beta;
  Eigen::VectorXd tau_true;
  std::vector<int> order;  // seeded shuffle; first p/2 entries = support
  double kappa = 0.0;
  double gamma = 0.0;
};

Protocol setup_protocol(const ExperimentConfig& cfg) {
  Protocol pr;
  pr.spec = build_covariance(cfg.covariance);
  if (pr.spec.p != cfg.p) throw ConfigError("covariance.p", "covariance dimension must equal p");
  if (cfg.n <= cfg.p) throw ConfigError("n", "requires n > p");
  RngStream beta_rng = RngStream::substream(cfg.seed, 0xbe7aull);
  pr.order = shuffled_order(cfg.p, beta_rng);
  if (cfg.scheme == BetaScheme::explicit_vec) {
    pr.beta = load_vector_csv(cfg.beta_path);
    if (pr.beta.size() != cfg.p) throw ConfigError("beta_path", "explicit beta has wrong length");
  } else {
    pr.beta = beta_from_order(cfg.scheme, pr.spec, cfg.gamma2, pr.order);
  }
  const double quad = pr.beta.dot(pr.spec.sigma.selfadjointView<Eigen::Lower>() * pr.beta);
  if (cfg.scheme != BetaScheme::explicit_vec && std::fabs(quad - cfg.gamma2) > 1e-10)
    throw std::runtime_error("setup_protocol: beta' Sigma beta != gamma2");
  pr.tau_true = conditional_sd(pr.spec);
  pr.kappa = static_cast<double>(cfg.p) / cfg.n;
  pr.gamma = std::sqrt(quad);
  return pr;
}

// Sample y from the logistic model given the linear predictor.
Eigen::VectorXd sample_labels(const Eigen::VectorXd& eta, RngStream& rng) {
  Eigen::VectorXd y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    y(i) = rng.uniform() < rho_prime(eta(i)) ? 1.0 : -1.0;
  return y;
}

enum class RepStatus { ok, separable, failed };

RepStatus fit_replicate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& warm, bool use_warm, FitResult& fit) {
  FitOptions opts;
  if (use_warm) opts.start = warm;
  fit = fit_mle(x, y, opts);
  if (fit.converged) return RepStatus::ok;
  if (use_warm) {  // retry the documented from-zero path before classifying
    fit = fit_mle(x, y, {});
    if (fit.converged) return RepStatus::ok;
  }
  // norm blow-up / perfect fit is the signature of a divergent MLE; only an
  // unexplained max_iter failure warrants the (expensive) LP-style check
  if (fit.failure == FitFailure::separable_suspect) return RepStatus::separable;
  try {
    return check_separable(x, y).separable ? RepStatus::separable : RepStatus::failed;
  } catch (const IndeterminateSeparability&) {
    return RepStatus::failed;
  }
}

}  // namespace

Eigen::VectorXd make_beta(BetaScheme scheme, const CovarianceSpec& spec, double gamma2,
                          RngStream& rng) {
  if (gamma2 < 0.0) throw std::invalid_argument("make_beta: gamma2 must be >= 0");
  const std::vector<int> order = shuffled_order(spec.p, rng);
  Eigen::VectorXd beta = beta_from_order(scheme, spec, gamma2, order);
  const double quad = beta.dot(spec.sigma.selfadjointView<Eigen::Lower>() * beta);
  if (std::fabs(quad - gamma2) > 1e-10) throw std::runtime_error("make_beta: normalization failed");
  return beta;
}

ExperimentResult run_marginal(const ExperimentConfig& cfg) {
  const Protocol pr = setup_protocol(cfg);
  const FixedPoint fp = solve_fixed_point({pr.kappa, pr.gamma});
  // tracked coordinate: the spike, or the first support index after the
  // shuffle (an arbitrary coordinate when beta = 0)
  const int j =
      (cfg.scheme == BetaScheme::single_spike && cfg.gamma2 > 0.0) ? 0 : pr.order.front();
  const double tau_j = pr.tau_true(j);
  const Eigen::VectorXd warm = fp.alpha * pr.beta;

  const int b = cfg.replicates;
  std::vector<double> t_stats(static_cast<size_t>(b));
  std::vector<int8_t> status(static_cast<size_t>(b));
  const size_t nlev = cfg.levels.size();
  std::vector<uint8_t> covered(static_cast<size_t>(b) * nlev, 0);

  parallel_replicates(b, cfg.threads, [&](int r) {
    RngStream rng = RngStream::substream(cfg.seed, 1, static_cast<std::uint64_t>(r));
    const DesignMatrix d = sample_design(cfg.n, pr.spec, rng);
    const Eigen::VectorXd y = sample_labels(d.x * pr.beta, rng);
    FitResult fit;
    const RepStatus st = fit_replicate(d.x, y, warm, cfg.warm_start, fit);
    status[static_cast<size_t>(r)] = static_cast<int8_t>(st);
    if (st != RepStatus::ok) return;
    const double t =
        std::sqrt(static_cast<double>(cfg.n)) * (fit.beta_hat(j) - fp.alpha * pr.beta(j)) * tau_j /
        fp.sigma;
    t_stats[static_cast<size_t>(r)] = t;
    for (size_t li = 0; li < nlev; ++li) {
      const auto [lo, hi] =
          adjusted_ci(fit.beta_hat(j), fp.alpha, fp.sigma, tau_j, cfg.n, cfg.levels[li]);
      covered[static_cast<size_t>(r) * nlev + li] =
          (pr.beta(j) >= lo && pr.beta(j) <= hi) ? 1 : 0;
    }
  });

  ExperimentResult res;
  res.mode = "marginal";
  res.replicates_requested = b;
  res.tracked_coordinate = j;
  res.theory = fp;
  std::vector<double> kept;
  kept.reserve(static_cast<size_t>(b));
  std::vector<int> cov_counts(nlev, 0);
  for (int r = 0; r < b; ++r) {
    const auto st = static_cast<RepStatus>(status[static_cast<size_t>(r)]);
    if (st == RepStatus::separable) {
      ++res.separable_skipped;
      continue;
    }
    if (st == RepStatus::failed) {
      ++res.failures;
      continue;
    }
    kept.push_back(t_stats[static_cast<size_t>(r)]);
    for (size_t li = 0; li < nlev; ++li)
      cov_counts[li] += covered[static_cast<size_t>(r) * nlev + li];
  }
  res.replicates_used = static_cast<int>(kept.size());
  res.flagged = res.failures > b / 100;
  for (size_t li = 0; li < nlev; ++li) {
    CoverageRow row;
    row.level = cfg.levels[li];
    row.proportion = res.replicates_used ? static_cast<double>(cov_counts[li]) / res.replicates_used
                                         : 0.0;
    row.se = binomial_se(row.proportion, std::max(1, res.replicates_used));
    res.coverage.push_back(row);
  }
  std::sort(kept.begin(), kept.end());
  res.qq.reserve(kept.size());
  for (size_t i = 0; i < kept.size(); ++i) {
    const double q = norm_quantile((static_cast<double>(i) + 0.5) / kept.size());
    res.qq.emplace_back(kept[i], q);
  }
  return res;
}

ExperimentResult run_bulk(const ExperimentConfig& cfg) {
  const Protocol pr = setup_protocol(cfg);
  const FixedPoint fp = solve_fixed_point({pr.kappa, pr.gamma});
  const Eigen::VectorXd warm = fp.alpha * pr.beta;
  for (double lv : cfg.levels)
    if (!(lv > 0.0 && lv < 1.0)) throw ConfigError("levels", "levels must lie in (0,1)");

  const int b = cfg.replicates;
  const size_t nlev = cfg.levels.size();
  std::vector<double> fractions(static_cast<size_t>(b) * nlev, 0.0);
  std::vector<int8_t> status(static_cast<size_t>(b));

  // precompute z * sigma/(sqrt(n) tau_j) half-widths per level and coordinate
  Eigen::MatrixXd half(static_cast<Eigen::Index>(nlev), cfg.p);
  for (size_t li = 0; li < nlev; ++li) {
    const double z = norm_quantile(0.5 * (1.0 + cfg.levels[li]));
    for (int j = 0; j < cfg.p; ++j)
      half(static_cast<Eigen::Index>(li), j) =
          z * fp.sigma / (std::sqrt(static_cast<double>(cfg.n)) * pr.tau_true(j));
  }

  parallel_replicates(b, cfg.threads, [&](int r) {
    RngStream rng = RngStream::substream(cfg.seed, 1, static_cast<std::uint64_t>(r));
    const DesignMatrix d = sample_design(cfg.n, pr.spec, rng);
    const Eigen::VectorXd y = sample_labels(d.x * pr.beta, rng);
    FitResult fit;
    const RepStatus st = fit_replicate(d.x, y, warm, cfg.warm_start, fit);
    status[static_cast<size_t>(r)] = static_cast<int8_t>(st);
    if (st != RepStatus::ok) return;
    for (size_t li = 0; li < nlev; ++li) {
      int inside = 0;
      for (int j = 0; j < cfg.p; ++j) {
        const double lo = (fit.beta_hat(j) - half(static_cast<Eigen::Index>(li), j)) / fp.alpha;
        const double hi = (fit.beta_hat(j) + half(static_cast<Eigen::Index>(li), j)) / fp.alpha;
        if (pr.beta(j) >= lo && pr.beta(j) <= hi) ++inside;
      }
      fractions[static_cast<size_t>(r) * nlev + li] = static_cast<double>(inside) / cfg.p;
    }
  });

  ExperimentResult res;
  res.mode = "bulk";
  res.replicates_requested = b;
  res.theory = fp;
  std::vector<std::vector<double>> per_level(nlev);
  for (int r = 0; r < b; ++r) {
    const auto st = static_cast<RepStatus>(status[static_cast<size_t>(r)]);
    if (st == RepStatus::separable) {
      ++res.separable_skipped;
      continue;
    }
    if (st == RepStatus::failed) {
      ++res.failures;
      continue;
    }
    for (size_t li = 0; li < nlev; ++li)
      per_level[li].push_back(fractions[static_cast<size_t>(r) * nlev + li]);
  }
  res.replicates_used = per_level.empty() ? 0 : static_cast<int>(per_level[0].size());
  res.flagged = res.failures > b / 100;
  for (size_t li = 0; li < nlev; ++li) {
    const auto& v = per_level[li];
    CoverageRow row;
    row.level = cfg.levels[li];
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / std::max<size_t>(1, v.size());
    double var = 0.0;
    for (double f : v) var += (f - mean) * (f - mean);
    var /= std::max<size_t>(1, v.size() > 1 ? v.size() - 1 : 1);
    row.proportion = mean;
    row.sd = std::sqrt(var);
    row.se = row.sd / std::sqrt(static_cast<double>(std::max<size_t>(1, v.size())));
    res.coverage.push_back(row);
  }
  return res;
}

ExperimentResult run_pvalue_study(const ExperimentConfig& cfg) {
  const Protocol pr = setup_protocol(cfg);
  const FixedPoint fp_true = solve_fixed_point({pr.kappa, pr.gamma});

  // designated null coordinate: first non-support index after the shuffle
  int j = -1;
  if (cfg.scheme == BetaScheme::half_nonnull_equal || cfg.scheme == BetaScheme::zero) {
    j = pr.order[static_cast<size_t>(cfg.p / 2)];
  } else if (cfg.scheme == BetaScheme::single_spike) {
    j = cfg.p > 1 ? 1 : 0;
  } else {
    for (int k = 0; k < cfg.p; ++k)
      if (pr.beta(k) == 0.0) {
        j = k;
        break;
      }
  }
  if (j < 0 || pr.beta(j) != 0.0)
    throw ConfigError("beta_scheme", "pvalue study needs a null coordinate");

  std::vector<std::string> outputs = cfg.outputs;
  if (outputs.empty()) outputs = {"wald", "lrt_classical", "t_adj", "lrt_rescaled"};
  auto wants = [&](const std::string& s) {
    return std::find(outputs.begin(), outputs.end(), s) != outputs.end();
  };
  const bool need_llr = wants("lrt_classical") || wants("lrt_rescaled");
  const bool need_tau_hat = wants("t_adj") && cfg.tau_mode != TauMode::true_tau;

  // estimated theory parameters (ProbeFrontier plug-in)
  FixedPoint fp_est = fp_true;
  if (cfg.parameter_mode == ParameterMode::probefrontier && !cfg.probe_per_replicate) {
    if (!cfg.gamma_hat) throw ConfigError("gamma_hat", "probefrontier mode needs gamma_hat (or probe_per_replicate)");
    fp_est = estimate_theory_params(pr.kappa, *cfg.gamma_hat);
  }
  std::optional<FrontierCurve> curve;
  if (cfg.parameter_mode == ParameterMode::probefrontier && cfg.probe_per_replicate) {
    if (cfg.frontier_cache.empty())
      throw ConfigError("frontier_cache", "probe_per_replicate needs a frontier cache file");
    curve = load_frontier(cfg.frontier_cache);
  }

  const Eigen::VectorXd warm = fp_true.alpha * pr.beta;
  const int b = cfg.replicates;
  const size_t nstat = outputs.size();
  std::vector<double> pvals(static_cast<size_t>(b) * nstat, 1.0);
  std::vector<int8_t> status(static_cast<size_t>(b));

  parallel_replicates(b, cfg.threads, [&](int r) {
    RngStream rng = RngStream::substream(cfg.seed, 1, static_cast<std::uint64_t>(r));
    const DesignMatrix d = sample_design(cfg.n, pr.spec, rng);
    const Eigen::VectorXd y = sample_labels(d.x * pr.beta, rng);
    FitResult fit;
    const RepStatus st = fit_replicate(d.x, y, warm, cfg.warm_start, fit);
    status[static_cast<size_t>(r)] = static_cast<int8_t>(st);
    if (st != RepStatus::ok) return;

    double sigma_hat = fp_true.sigma, lambda_hat = fp_true.lambda;
    if (cfg.parameter_mode == ParameterMode::probefrontier) {
      if (cfg.probe_per_replicate) {
        try {
          ProbeConfig pc;
          pc.seed = RngStream::substream(cfg.seed, 2, static_cast<std::uint64_t>(r)).next_u64();
          const ProbeResult pres = probe(d.x, y, pc, *curve);
          const FixedPoint fpe = estimate_theory_params(pr.kappa, pres.gamma_hat);
          sigma_hat = fpe.sigma;
          lambda_hat = fpe.lambda;
        } catch (const std::exception&) {
          status[static_cast<size_t>(r)] = static_cast<int8_t>(RepStatus::failed);
          return;
        }
      } else {
        sigma_hat = fp_est.sigma;
        lambda_hat = fp_est.lambda;
      }
    }

    double tau_hat = pr.tau_true(j);
    if (need_tau_hat) {
      tau_hat = cfg.tau_mode == TauMode::rss
                    ? estimate_tau_rss(d.x, j)
                    : conditional_sd(build_ar1(cfg.p, estimate_rho_ar1(d.x)))(j);
    }

    double llr_value = 0.0;
    if (need_llr) {
      FitOptions ropts;
      ropts.start = fit.beta_hat;
      const FitResult restricted = fit_restricted(d.x, y, {j}, ropts);
      if (!restricted.converged) {
        status[static_cast<size_t>(r)] = static_cast<int8_t>(RepStatus::failed);
        return;
      }
      llr_value = std::max(0.0, fit.loglik - restricted.loglik);
    }

    for (size_t si = 0; si < nstat; ++si) {
      const std::string& s = outputs[si];
      double p = 1.0;
      if (s == "wald") {
        const double se = std::sqrt(observed_info_inv_diag(d.x, fit.beta_hat, j));
        p = 2.0 * norm_sf(std::fabs(fit.beta_hat(j)) / se);
      } else if (s == "lrt_classical") {
        p = chisq_sf(2.0 * llr_value, 1.0);
      } else if (s == "t_adj") {
        p = t_pvalue(fit.beta_hat(j), sigma_hat, tau_hat, cfg.n);
      } else if (s == "lrt_rescaled") {
        p = lrt_pvalue(llr_value, pr.kappa, sigma_hat, lambda_hat);
      } else {
        throw ConfigError("outputs", "unknown output statistic: " + s);
      }
      pvals[static_cast<size_t>(r) * nstat + si] = p;
    }
  });

  ExperimentResult res;
  res.mode = "pvalue";
  res.replicates_requested = b;
  res.tracked_coordinate = j;
  res.theory = fp_true;
  std::vector<std::vector<double>> per_stat(nstat);
  for (int r = 0; r < b; ++r) {
    const auto st = static_cast<RepStatus>(status[static_cast<size_t>(r)]);
    if (st == RepStatus::separable) {
      ++res.separable_skipped;
      continue;
    }
    if (st == RepStatus::failed) {
      ++res.failures;
      continue;
    }
    for (size_t si = 0; si < nstat; ++si)
      per_stat[si].push_back(pvals[static_cast<size_t>(r) * nstat + si]);
  }
  res.replicates_used = per_stat.empty() ? 0 : static_cast<int>(per_stat[0].size());
  res.flagged = res.failures > b / 100;
  for (size_t si = 0; si < nstat; ++si) {
    TailTable table;
    table.statistic = outputs[si];
    table.cutoffs = cfg.cutoffs;
    for (double c : cfg.cutoffs) {
      const auto& v = per_stat[si];
      const int count = static_cast<int>(std::count_if(v.begin(), v.end(), [&](double p) {
        return p <= c;
      }));
      const double prop = v.empty() ? 0.0 : static_cast<double>(count) / v.size();
      table.proportions.push_back(prop);
      table.ses.push_back(binomial_se(prop, std::max<size_t>(1, v.size())));
    }
    table.pvalues_sorted = per_stat[si];
    std::sort(table.pvalues_sorted.begin(), table.pvalues_sorted.end());
    res.tails.push_back(std::move(table));
  }
  return res;
}

ExperimentResult run_convergence_check(double kappa, double gamma, int n, int replicates,
                                       std::uint64_t seed, int threads, bool warm_start) {
  if (gamma <= 0.0)
    throw ConfigError("gamma2", "convergence check needs gamma > 0 (alpha(n) is undefined at 0)");
  const int p = static_cast<int>(std::lround(kappa * n));
  if (p < 1 || p >= n) throw ConfigError("n", "need 1 <= round(kappa n) < n");
  const CovarianceSpec spec = make_identity(p);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  theta(0) = gamma;
  const FixedPoint fp = solve_fixed_point({static_cast<double>(p) / n, gamma});
  const Eigen::VectorXd warm = fp.alpha * theta;

  std::vector<double> alphas(static_cast<size_t>(replicates));
  std::vector<double> sigma2s(static_cast<size_t>(replicates));
  std::vector<int8_t> status(static_cast<size_t>(replicates));

  parallel_replicates(replicates, threads, [&](int r) {
    RngStream rng = RngStream::substream(seed, 1, static_cast<std::uint64_t>(r));
    const DesignMatrix d = sample_design(n, spec, rng);
    const Eigen::VectorXd y = sample_labels(d.x * theta, rng);
    FitResult fit;
    const RepStatus st = fit_replicate(d.x, y, warm, warm_start, fit);
    status[static_cast<size_t>(r)] = static_cast<int8_t>(st);
    if (st != RepStatus::ok) return;
    const double alpha_n = fit.beta_hat.dot(theta) / theta.squaredNorm();
    alphas[static_cast<size_t>(r)] = alpha_n;
    sigma2s[static_cast<size_t>(r)] = (fit.beta_hat - alpha_n * theta).squaredNorm();
  });

  ExperimentResult res;
  res.mode = "convergence";
  res.replicates_requested = replicates;
  res.theory = fp;
  double sa = 0.0, sa2 = 0.0, ss = 0.0, ss2 = 0.0;
  for (int r = 0; r < replicates; ++r) {
    const auto st = static_cast<RepStatus>(status[static_cast<size_t>(r)]);
    if (st == RepStatus::separable) {
      ++res.separable_skipped;
      continue;
    }
    if (st == RepStatus::failed) {
      ++res.failures;
      continue;
    }
    ++res.replicates_used;
    sa += alphas[static_cast<size_t>(r)];
    sa2 += alphas[static_cast<size_t>(r)] * alphas[static_cast<size_t>(r)];
    ss += sigma2s[static_cast<size_t>(r)];
    ss2 += sigma2s[static_cast<size_t>(r)] * sigma2s[static_cast<size_t>(r)];
  }
  const int m = std::max(1, res.replicates_used);
  const double mean_a = sa / m, mean_s = ss / m;
  res.scalars["alpha_n_mean"] = mean_a;
  res.scalars["alpha_n_se"] = std::sqrt(std::max(0.0, sa2 / m - mean_a * mean_a) / m);
  res.scalars["sigma_n2_mean"] = mean_s;
  res.scalars["sigma_n2_se"] = std::sqrt(std::max(0.0, ss2 / m - mean_s * mean_s) / m);
  res.scalars["alpha_star"] = fp.alpha;
  res.scalars["kappa_sigma_star2"] = (static_cast<double>(p) / n) * fp.sigma * fp.sigma;
  res.flagged = res.failures > replicates / 100;
  return res;
}

ExperimentResult run_sphere_check(double kappa, double gamma, int n, int replicates,
                                  std::uint64_t seed, int threads) {
  const int p = static_cast<int>(std::lround(kappa * n));
  if (p < 3 || p >= n) throw ConfigError("n", "need 3 <= round(kappa n) < n");
  const CovarianceSpec spec = make_identity(p);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  theta(0) = gamma;

  std::vector<Eigen::VectorXd> us(static_cast<size_t>(replicates));
  std::vector<int8_t> status(static_cast<size_t>(replicates));
  std::vector<double> norm_errs(static_cast<size_t>(replicates), 0.0);

  parallel_replicates(replicates, threads, [&](int r) {
    RngStream rng = RngStream::substream(seed, 1, static_cast<std::uint64_t>(r));
    const DesignMatrix d = sample_design(n, spec, rng);
    const Eigen::VectorXd y = sample_labels(d.x * theta, rng);
    FitResult fit;
    const RepStatus st = fit_replicate(d.x, y, Eigen::VectorXd(), false, fit);
    status[static_cast<size_t>(r)] = static_cast<int8_t>(st);
    if (st != RepStatus::ok) return;
    Eigen::VectorXd perp = fit.beta_hat;
    if (gamma > 0.0) perp -= (fit.beta_hat.dot(theta) / theta.squaredNorm()) * theta;
    Eigen::VectorXd u = perp / perp.norm();
    norm_errs[static_cast<size_t>(r)] = std::fabs(u.norm() - 1.0);
    us[static_cast<size_t>(r)] = std::move(u);
  });

  ExperimentResult res;
  res.mode = "sphere";
  res.replicates_requested = replicates;
  Eigen::VectorXd mean_u = Eigen::VectorXd::Zero(p);
  std::vector<double> u2s, u3s;
  double max_norm_err = 0.0;
  for (int r = 0; r < replicates; ++r) {
    const auto st = static_cast<RepStatus>(status[static_cast<size_t>(r)]);
    if (st == RepStatus::separable) {
      ++res.separable_skipped;
      continue;
    }
    if (st == RepStatus::failed) {
      ++res.failures;
      continue;
    }
    ++res.replicates_used;
    mean_u += us[static_cast<size_t>(r)];
    u2s.push_back(us[static_cast<size_t>(r)](1));
    u3s.push_back(us[static_cast<size_t>(r)](2));
    max_norm_err = std::max(max_norm_err, norm_errs[static_cast<size_t>(r)]);
  }
  const int m = std::max(1, res.replicates_used);
  mean_u /= m;
  const double root_p = std::sqrt(static_cast<double>(p));
  res.scalars["max_abs_mean_sqrtp_u"] = root_p * mean_u.cwiseAbs().maxCoeff();
  res.scalars["mean_sqrtp_u1"] = root_p * mean_u(1);
  res.scalars["mean_sqrtp_u2"] = root_p * mean_u(2);
  if (p > 3) res.scalars["mean_sqrtp_u3"] = root_p * mean_u(3);
  res.scalars["max_norm_error"] = max_norm_err;
  double m2 = 0.0, m3 = 0.0, c23 = 0.0, v2 = 0.0, v3 = 0.0;
  for (size_t i = 0; i < u2s.size(); ++i) {
    m2 += u2s[i];
    m3 += u3s[i];
  }
  m2 /= m;
  m3 /= m;
  for (size_t i = 0; i < u2s.size(); ++i) {
    c23 += (u2s[i] - m2) * (u3s[i] - m3);
    v2 += (u2s[i] - m2) * (u2s[i] - m2);
    v3 += (u3s[i] - m3) * (u3s[i] - m3);
  }
  res.scalars["corr_u2_u3"] = (v2 > 0.0 && v3 > 0.0) ? c23 / std::sqrt(v2 * v3) : 0.0;
  res.flagged = res.failures > replicates / 100;
  return res;
}

SubsampleStudy run_subsample_study(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int var_idx,
                                   const std::vector<double>& kappas, int b, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (var_idx < 0 || var_idx >= p) throw std::invalid_argument("subsample study: bad variable");
  const double kappa0 = static_cast<double>(p) / n;
  for (double k : kappas)
    if (k < kappa0 - 1e-12)
      throw std::invalid_argument("subsample study: kappa below the full-data p/n");

  SubsampleStudy study;
  const FitResult full = fit_mle(X, y);
  if (!full.converged) throw NonConvergence(full);
  study.full_data_mle = full.beta_hat(var_idx);

  for (size_t ki = 0; ki < kappas.size(); ++ki) {
    const int sub_n = std::min(n, static_cast<int>(std::lround(p / kappas[ki])));
    for (int r = 0; r < b; ++r) {
      RngStream rng = RngStream::substream(seed, ki, static_cast<std::uint64_t>(r));
      std::vector<int> idx(static_cast<size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      for (int k = 0; k < sub_n; ++k)
        std::swap(idx[static_cast<size_t>(k)],
                  idx[static_cast<size_t>(k) +
                      static_cast<size_t>(rng.below(static_cast<std::uint64_t>(n - k)))]);
      Eigen::MatrixXd xs(sub_n, p);
      Eigen::VectorXd ys(sub_n);
      for (int k = 0; k < sub_n; ++k) {
        xs.row(k) = X.row(idx[static_cast<size_t>(k)]);
        ys(k) = y(idx[static_cast<size_t>(k)]);
      }
      bool both = false;
      for (int k = 1; k < sub_n && !both; ++k) both = ys(k) != ys(0);
      FitResult fit;
      if (both) fit = fit_mle(xs, ys);
      if (!both || !fit.converged) {
        ++study.failures;
        continue;
      }
      SubsampleRow row;
      row.kappa = kappas[ki];
      row.rep = r;
      row.beta_hat = fit.beta_hat(var_idx);
      row.se_classical = std::sqrt(observed_info_inv_diag(xs, fit.beta_hat, var_idx));
      study.rows.push_back(row);
    }
  }
  return study;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.mode == "marginal") return run_marginal(cfg);
  if (cfg.mode == "bulk") return run_bulk(cfg);
  if (cfg.mode == "pvalue") return run_pvalue_study(cfg);
  if (cfg.mode == "convergence")
    return run_convergence_check(static_cast<double>(cfg.p) / cfg.n, std::sqrt(cfg.gamma2), cfg.n,
                                 cfg.replicates, cfg.seed, cfg.threads, cfg.warm_start);
  if (cfg.mode == "sphere")
    return run_sphere_check(static_cast<double>(cfg.p) / cfg.n, std::sqrt(cfg.gamma2), cfg.n,
                            cfg.replicates, cfg.seed, cfg.threads);
  throw ConfigError("mode", "unknown mode: " + cfg.mode);
}

namespace {

BetaScheme parse_scheme(const std::string& s) {
  if (s == "zero") return BetaScheme::zero;
  if (s == "half_nonnull_equal") return BetaScheme::half_nonnull_equal;
  if (s == "single_spike") return BetaScheme::single_spike;
  if (s == "explicit") return BetaScheme::explicit_vec;
  throw ConfigError("beta_scheme", "unknown beta_scheme: " + s);
}

ParameterMode parse_pmode(const std::string& s) {
  if (s == "true") return ParameterMode::true_params;
  if (s == "probefrontier") return ParameterMode::probefrontier;
  if (s == "classical") return ParameterMode::classical;
  throw ConfigError("parameter_mode", "unknown parameter_mode: " + s);
}

TauMode parse_tmode(const std::string& s) {
  if (s == "true") return TauMode::true_tau;
  if (s == "rss") return TauMode::rss;
  if (s == "ar1") return TauMode::ar1;
  throw ConfigError("tau_mode", "unknown tau_mode: " + s);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("(json)", std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.mode = j.value("mode", "marginal");
    cfg.n = j.at("n").get<int>();
    cfg.p = j.at("p").get<int>();
    if (cfg.n <= 0) throw ConfigError("n", "n must be positive");
    if (cfg.p <= 0 || cfg.p >= cfg.n) throw ConfigError("p", "p must satisfy 0 < p < n");

    if (!j.contains("covariance")) throw ConfigError("covariance", "missing covariance block");
    const auto& c = j["covariance"];
    const std::string kind = c.value("kind", "identity");
    cfg.covariance.p = c.value("p", cfg.p);
    if (kind == "identity") {
      cfg.covariance.kind = CovKind::identity;
    } else if (kind == "ar1") {
      cfg.covariance.kind = CovKind::ar1;
      if (!c.contains("rho")) throw ConfigError("covariance.rho", "ar1 needs rho");
      cfg.covariance.rho = c["rho"].get<double>();
    } else if (kind == "random_correlation") {
      cfg.covariance.kind = CovKind::random_correlation;
      cfg.covariance.df = c.value("df", 10);
      cfg.covariance.seed = c.value("seed", 0ull);
    } else if (kind == "explicit") {
      cfg.covariance.kind = CovKind::explicit_matrix;
      if (!c.contains("path")) throw ConfigError("covariance.path", "explicit needs path");
      cfg.covariance.path = c["path"].get<std::string>();
    } else {
      throw ConfigError("covariance.kind", "unknown covariance kind: " + kind);
    }

    cfg.scheme = parse_scheme(j.value("beta_scheme", "half_nonnull_equal"));
    cfg.gamma2 = j.value("gamma2", 0.0);
    if (cfg.gamma2 < 0.0) throw ConfigError("gamma2", "gamma2 must be >= 0");
    cfg.beta_path = j.value("beta_path", "");
    cfg.replicates = j.value("replicates", 1);
    if (cfg.replicates < 1) throw ConfigError("replicates", "replicates must be >= 1");
    cfg.seed = j.value("seed", 0ull);
    cfg.parameter_mode = parse_pmode(j.value("parameter_mode", "true"));
    cfg.tau_mode = parse_tmode(j.value("tau_mode", "true"));
    if (j.contains("gamma_hat")) cfg.gamma_hat = j["gamma_hat"].get<double>();
    cfg.probe_per_replicate = j.value("probe_per_replicate", false);
    cfg.frontier_cache = j.value("frontier_cache", "");
    if (j.contains("levels")) cfg.levels = j["levels"].get<std::vector<double>>();
    for (double lv : cfg.levels)
      if (!(lv > 0.0 && lv < 1.0)) throw ConfigError("levels", "levels must lie in (0,1)");
    if (j.contains("cutoffs")) cfg.cutoffs = j["cutoffs"].get<std::vector<double>>();
    if (j.contains("outputs")) cfg.outputs = j["outputs"].get<std::vector<std::string>>();
    cfg.threads = j.value("threads", 0);
    cfg.warm_start = j.value("warm_start", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("(schema)", std::string("config field error: ") + e.what());
  }
  return cfg;
}

std::string result_csv(const ExperimentResult& res) {
  std::ostringstream out;
  out.precision(17);
  if (res.mode == "marginal" || res.mode == "bulk") {
    out << (res.mode == "bulk" ? "level,mean,sd,se\n" : "level,proportion,se\n");
    for (const auto& row : res.coverage) {
      out << row.level << ',' << row.proportion;
      if (res.mode == "bulk") out << ',' << row.sd;
      out << ',' << row.se << '\n';
    }
  } else if (res.mode == "pvalue") {
    out << "cutoff";
    for (const auto& t : res.tails) out << ',' << t.statistic << ',' << t.statistic << "_se";
    out << '\n';
    if (!res.tails.empty()) {
      for (size_t ci = 0; ci < res.tails[0].cutoffs.size(); ++ci) {
        out << res.tails[0].cutoffs[ci];
        for (const auto& t : res.tails) out << ',' << t.proportions[ci] << ',' << t.ses[ci];
        out << '\n';
      }
    }
  } else {
    out << "quantity,value\n";
    for (const auto& [k, v] : res.scalars) out << k << ',' << v << '\n';
  }
  return out.str();
}

std::string qq_csv(const ExperimentResult& res) {
  std::ostringstream out;
  out.precision(17);
  out << "empirical,theoretical\n";
  for (const auto& [e, t] : res.qq) out << e << ',' << t << '\n';
  return out.str();
}

std::string result_json(const ExperimentResult& res, const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = res.mode;
  j["n"] = cfg.n;
  j["p"] = cfg.p;
  j["gamma2"] = cfg.gamma2;
  j["seed"] = cfg.seed;
  j["replicates_requested"] = res.replicates_requested;
  j["replicates_used"] = res.replicates_used;
  j["separable_skipped"] = res.separable_skipped;
  j["failures"] = res.failures;
  j["flagged"] = res.flagged;
  if (res.tracked_coordinate >= 0) j["tracked_coordinate"] = res.tracked_coordinate;
  if (res.theory.sigma > 0.0) {
    j["theory"] = {{"alpha_star", res.theory.alpha},
                   {"sigma_star", res.theory.sigma},
                   {"lambda_star", res.theory.lambda},
                   {"kappa", res.theory.inputs.kappa},
                   {"gamma", res.theory.inputs.gamma}};
  }
  if (!res.coverage.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : res.coverage)
      arr.push_back({{"level", row.level},
                     {"proportion", row.proportion},
                     {"sd", row.sd},
                     {"se", row.se}});
    j["coverage"] = arr;
  }
  if (!res.tails.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : res.tails) {
      nlohmann::ordered_json tj;
      tj["statistic"] = t.statistic;
      tj["cutoffs"] = t.cutoffs;
      tj["proportions"] = t.proportions;
      tj["ses"] = t.ses;
      arr.push_back(tj);
    }
    j["tails"] = arr;
  }
  if (!res.scalars.empty()) j["scalars"] = res.scalars;
  return j.dump(2) + "\n";
}

}  // namespace hdlogit
