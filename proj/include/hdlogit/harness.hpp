#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdlogit/covariance.hpp"
#include "hdlogit/fixed_point.hpp"
#include "hdlogit/frontier.hpp"
#include "hdlogit/rng.hpp"

namespace hdlogit {

enum class BetaScheme { zero, half_nonnull_equal, single_spike, explicit_vec };
enum class ParameterMode { true_params, probefrontier, classical };
enum class TauMode { true_tau, rss, ar1 };

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& msg)
      : std::runtime_error(msg), field(std::move(f)) {}
};

// Declarative covariance entry of the experiment config.
struct CovDescriptor {
  CovKind kind = CovKind::identity;
  int p = 0;
  double rho = 0.0;
  int df = 0;
  std::uint64_t seed = 0;
  std::string path;  // explicit matrix CSV
};

CovarianceSpec build_covariance(const CovDescriptor& d);

struct ExperimentConfig {
  std::string mode = "marginal";  // marginal | bulk | pvalue | convergence | sphere
  int n = 0;
  int p = 0;
  CovDescriptor covariance;
  BetaScheme scheme = BetaScheme::half_nonnull_equal;
  double gamma2 = 0.0;
  std::string beta_path;  // explicit_vec
  int replicates = 1;
  std::uint64_t seed = 0;
  ParameterMode parameter_mode = ParameterMode::true_params;
  TauMode tau_mode = TauMode::true_tau;
  // probefrontier at desk scale: plug-in gamma_hat instead of re-probing in
  // every replicate (probe_per_replicate turns the full protocol back on)
  std::optional<double> gamma_hat;
  bool probe_per_replicate = false;
  std::string frontier_cache;  // needed when probe_per_replicate
  std::vector<double> levels = {0.99, 0.98, 0.95, 0.90, 0.80};
  std::vector<double> cutoffs = {0.10, 0.05, 0.01, 0.005};
  std::vector<std::string> outputs;  // subset of {wald, lrt_classical, t_adj, lrt_rescaled}
  int threads = 0;                   // 0 = hardware concurrency
  bool warm_start = false;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);

struct CoverageRow {
  double level = 0.0;
  double proportion = 0.0;  // in [0,1]
  double se = 0.0;          // binomial for single-coordinate, across-replicate for bulk
  double sd = 0.0;          // across-replicate SD (bulk tables only)
};

struct TailTable {
  std::string statistic;
  std::vector<double> cutoffs;
  std::vector<double> proportions;
  std::vector<double> ses;
  std::vector<double> pvalues_sorted;  // raw material for QQ / KS checks
};

struct ExperimentResult {
  std::string mode;
  int replicates_requested = 0;
  int replicates_used = 0;
  int separable_skipped = 0;
  int failures = 0;
  bool flagged = false;  // > 1% failures
  int tracked_coordinate = -1;

  std::vector<CoverageRow> coverage;
  std::vector<TailTable> tails;
  std::vector<std::pair<double, double>> qq;  // empirical vs theoretical quantile

  // convergence / sphere diagnostics
  std::map<std::string, double> scalars;

  FixedPoint theory;
};

// beta under the requested scheme; always satisfies beta' Sigma beta = gamma2
// to 1e-10.
Eigen::VectorXd make_beta(BetaScheme scheme, const CovarianceSpec& spec, double gamma2,
                          RngStream& rng);

ExperimentResult run_marginal(const ExperimentConfig& cfg);
ExperimentResult run_bulk(const ExperimentConfig& cfg);
ExperimentResult run_pvalue_study(const ExperimentConfig& cfg);
ExperimentResult run_convergence_check(double kappa, double gamma, int n, int replicates,
                                       std::uint64_t seed, int threads = 0, bool warm_start = false);
ExperimentResult run_sphere_check(double kappa, double gamma, int n, int replicates,
                                  std::uint64_t seed, int threads = 0);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Subsample bias study: for each kappa, B subsamples of size round(p/kappa)
// drawn without replacement; records the target coefficient and its classical
// standard error per converged subsample fit.
struct SubsampleRow {
  double kappa = 0.0;
  int rep = 0;
  double beta_hat = 0.0;
  double se_classical = 0.0;
};

struct SubsampleStudy {
  std::vector<SubsampleRow> rows;
  double full_data_mle = 0.0;
  int failures = 0;
};

SubsampleStudy run_subsample_study(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int var_idx,
                                   const std::vector<double>& kappas, int b, std::uint64_t seed);

// CSV tables in the paper's layout plus a JSON summary.
std::string result_csv(const ExperimentResult& res);
std::string result_json(const ExperimentResult& res, const ExperimentConfig& cfg);
std::string qq_csv(const ExperimentResult& res);

}  // namespace hdlogit
