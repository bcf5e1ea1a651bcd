#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hdlogit/csv.hpp"
#include "hdlogit/frontier.hpp"
#include "hdlogit/harness.hpp"
#include "hdlogit/inference.hpp"
#include "hdlogit/logistic.hpp"
#include "hdlogit/probe.hpp"
#include "hdlogit/separability.hpp"
#include "hdlogit/special.hpp"

namespace fs = std::filesystem;
using namespace hdlogit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSeparable = 3;
constexpr int kExitProbe = 4;

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string cache_dir;
};

fs::path resolve_cache_dir(const GlobalOpts& g) {
  if (const char* env = std::getenv("HDLOGIT_CACHE")) return fs::path(env);
  if (!g.cache_dir.empty()) return fs::path(g.cache_dir);
  return fs::path(".hdlogit_cache");
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    double lo, hi, step;
    char c1, c2;
    std::istringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
      throw std::runtime_error("grid must be lo:hi:step or a comma list");
    for (double k = lo; k <= hi + 1e-12; k += step) grid.push_back(k);
  } else {
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  }
  return grid;
}

FrontierCurve obtain_frontier(const GlobalOpts& g, const std::string& explicit_path,
                              bool build_if_missing) {
  if (!explicit_path.empty()) return load_frontier(explicit_path);
  const fs::path repo_default = fs::path("data") / "frontier_default.json";
  if (fs::exists(repo_default)) return load_frontier(repo_default.string());
  const fs::path cached = resolve_cache_dir(g) / "frontier_default.json";
  if (fs::exists(cached)) return load_frontier(cached.string());
  if (!build_if_missing) throw std::runtime_error("no frontier cache available");
  std::cerr << "building frontier curve (one-time, cached at " << cached.string() << ")...\n";
  FrontierBuildOptions opts;
  opts.n = 1000;
  opts.reps = 200;
  opts.threads = g.threads;
  opts.verbose = true;
  const FrontierCurve curve = build_frontier(parse_grid("0.06:0.50:0.02"), g.seed, opts);
  fs::create_directories(cached.parent_path());
  save_frontier(curve, cached.string());
  return curve;
}

int cmd_simulate(const GlobalOpts& g, const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot open config " << config_path << "\n";
    return kExitConfig;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg;
  try {
    cfg = parse_experiment_config(buf.str());
  } catch (const ConfigError& e) {
    std::cerr << "config error in field '" << e.field << "': " << e.what() << "\n";
    return kExitConfig;
  }
  if (g.threads > 0) cfg.threads = g.threads;
  if (g.seed != 0) cfg.seed = g.seed;

  ExperimentResult res;
  try {
    res = run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error in field '" << e.field << "': " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path base = g.out.empty() ? fs::path(config_path).parent_path() : fs::path(g.out);
  const std::string stem = fs::path(config_path).stem().string();
  write_file(base / (stem + "_result.csv"), result_csv(res));
  write_file(base / (stem + "_summary.json"), result_json(res, cfg));
  if (!res.qq.empty()) write_file(base / (stem + "_qq.csv"), qq_csv(res));
  std::cout << result_csv(res);
  return kExitOk;
}

int cmd_frontier(const GlobalOpts& g, const std::string& grid_text, int n, int reps,
                 const std::string& cache_path) {
  FrontierBuildOptions opts;
  opts.n = n;
  opts.reps = reps;
  opts.threads = g.threads;
  opts.verbose = true;
  const FrontierCurve curve = build_frontier(parse_grid(grid_text), g.seed, opts);
  const fs::path path = cache_path.empty()
                            ? resolve_cache_dir(g) / "frontier_default.json"
                            : fs::path(cache_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_frontier(curve, path.string());
  std::cout << "kappa,gamma\n";
  for (const auto& k : curve.knots) std::cout << k.kappa << ',' << k.gamma << '\n';
  std::cerr << "frontier cache written to " << path.string() << "\n";
  return kExitOk;
}

int cmd_fit(const GlobalOpts& g, const std::string& data_path, const std::string& label_col,
            bool no_center) {
  const Dataset ds = load_dataset_csv(data_path, label_col, !no_center);
  if (ds.x.rows() <= ds.x.cols()) {
    std::cerr << "error: need more rows than covariates (n > p)\n";
    return kExitConfig;
  }
  const FitResult fit = fit_mle(ds.x, ds.y);
  if (!fit.converged) {
    const auto rep = check_separable(ds.x, ds.y);
    if (rep.separable) {
      std::cerr << "error: the data is completely separable; the MLE does not exist (the\n"
                   "problem lies above the existence phase transition)\n";
      return kExitSeparable;
    }
    std::cerr << "error: Newton did not converge (" << fit.iterations << " iterations)\n";
    return kExitInternal;
  }
  std::ostringstream out;
  out.precision(17);
  out << "variable,beta_hat,se_classical,p_classical\n";
  for (int j = 0; j < ds.x.cols(); ++j) {
    const double se = std::sqrt(observed_info_inv_diag(ds.x, fit.beta_hat, j));
    const double p = 2.0 * norm_sf(std::fabs(fit.beta_hat(j)) / se);
    out << ds.column_names[static_cast<size_t>(j)] << ',' << fit.beta_hat(j) << ',' << se << ','
        << p << '\n';
  }
  std::cout << out.str();
  std::cerr << "log-likelihood " << fit.loglik << ", " << fit.iterations << " iterations\n";
  if (!g.out.empty()) write_file(fs::path(g.out) / "fit.csv", out.str());
  return kExitOk;
}

int cmd_infer(const GlobalOpts& g, const std::string& data_path, const std::string& label_col,
              double level, const std::string& tau_mode, bool with_lrt, bool no_center,
              const std::string& frontier_path) {
  const Dataset ds = load_dataset_csv(data_path, label_col, !no_center);
  const int n = static_cast<int>(ds.x.rows());
  const int p = static_cast<int>(ds.x.cols());
  if (n <= p) {
    std::cerr << "error: need more rows than covariates (n > p)\n";
    return kExitConfig;
  }

  const FitResult fit = fit_mle(ds.x, ds.y);
  if (!fit.converged) {
    const auto rep = check_separable(ds.x, ds.y);
    if (rep.separable) {
      std::cerr << "error: the data is completely separable, so the MLE does not exist.\n"
                   "At dimension ratio p/n = "
                << static_cast<double>(p) / n
                << " the problem lies above the MLE existence frontier; adjusted inference\n"
                   "is not defined here.\n";
      return kExitSeparable;
    }
    std::cerr << "error: Newton did not converge on non-separable data\n";
    return kExitInternal;
  }

  const FrontierCurve curve = obtain_frontier(g, frontier_path, true);
  ProbeConfig pcfg;
  pcfg.seed = g.seed;
  ProbeResult pres;
  try {
    pres = probe(ds.x, ds.y, pcfg, curve);
  } catch (const ProbeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind == ProbeError::Kind::already_separable ? kExitSeparable : kExitProbe;
  }
  std::cerr << "probe: kappa_hat=" << pres.kappa_hat << " gamma_hat=" << pres.gamma_hat
            << " (gamma_hat^2=" << pres.gamma_hat * pres.gamma_hat << ")\n";

  const FixedPoint params = estimate_theory_params(static_cast<double>(p) / n, pres.gamma_hat);
  const TauSource tau_source = tau_mode == "ar1" ? TauSource::ar1 : TauSource::rss;
  const InferenceReport report = build_report(ds.x, ds.y, fit, params, tau_source, level, with_lrt);

  const fs::path base = g.out.empty() ? fs::path(".") : fs::path(g.out);
  const std::string stem = fs::path(data_path).stem().string();
  write_file(base / (stem + "_inference.csv"), report_csv(report));
  write_file(base / (stem + "_inference_header.json"), report_json_header(report));

  // side-by-side: adjusted vs classical
  std::cout << "variable,beta_hat,debiased,ci_lo,ci_hi,p_adjusted,se_classical,p_classical\n";
  std::cout.precision(10);
  for (int j = 0; j < p; ++j) {
    const auto& r = report.rows[static_cast<size_t>(j)];
    const double se = std::sqrt(observed_info_inv_diag(ds.x, fit.beta_hat, j));
    const double pc = 2.0 * norm_sf(std::fabs(fit.beta_hat(j)) / se);
    std::cout << ds.column_names[static_cast<size_t>(j)] << ',' << r.beta_hat << ',' << r.debiased
              << ',' << r.ci_lo << ',' << r.ci_hi << ',' << r.p_t << ',' << se << ',' << pc
              << '\n';
  }
  std::cerr << "report written to " << (base / (stem + "_inference.csv")).string() << "\n";
  return kExitOk;
}

int cmd_subsample_study(const GlobalOpts& g, const std::string& data_path,
                        const std::string& label_col, const std::string& variable,
                        const std::string& kappas_text, int b, bool no_center) {
  const Dataset ds = load_dataset_csv(data_path, label_col, !no_center);
  const int n = static_cast<int>(ds.x.rows());
  const int p = static_cast<int>(ds.x.cols());
  if (n <= p) {
    std::cerr << "error: need more rows than covariates (n > p)\n";
    return kExitConfig;
  }
  int var_idx = -1;
  for (int j = 0; j < p; ++j)
    if (ds.column_names[static_cast<size_t>(j)] == variable) var_idx = j;
  if (var_idx < 0) {
    try {
      var_idx = std::stoi(variable);
    } catch (...) {
    }
  }
  if (var_idx < 0 || var_idx >= p) {
    std::cerr << "error: variable '" << variable << "' not found\n";
    return kExitConfig;
  }

  const double kappa0 = static_cast<double>(p) / n;
  std::vector<double> kappas = parse_grid(kappas_text);
  for (double k : kappas)
    if (k < kappa0 - 1e-12) {
      std::cerr << "error: requested kappa " << k << " below the full-data p/n = " << kappa0
                << "\n";
      return kExitConfig;
    }

  SubsampleStudy study;
  try {
    study = run_subsample_study(ds.x, ds.y, var_idx, kappas, b, g.seed);
  } catch (const NonConvergence&) {
    std::cerr << "error: full-data fit did not converge\n";
    return check_separable(ds.x, ds.y).separable ? kExitSeparable : kExitInternal;
  }

  std::ostringstream rows;
  rows.precision(17);
  rows << "kappa,rep,beta_hat,se_classical\n";
  for (const auto& r : study.rows)
    rows << r.kappa << ',' << r.rep << ',' << r.beta_hat << ',' << r.se_classical << '\n';

  const fs::path base = g.out.empty() ? fs::path(".") : fs::path(g.out);
  const std::string stem = fs::path(data_path).stem().string();
  write_file(base / (stem + "_subsample.csv"), rows.str());
  std::ostringstream meta;
  meta.precision(17);
  meta << "{\n  \"variable\": \"" << ds.column_names[static_cast<size_t>(var_idx)]
       << "\",\n  \"full_data_mle\": " << study.full_data_mle
       << ",\n  \"failures\": " << study.failures << "\n}\n";
  write_file(base / (stem + "_subsample_meta.json"), meta.str());
  std::cout << rows.str();
  std::cerr << "full-data MLE for " << ds.column_names[static_cast<size_t>(var_idx)] << " = "
            << study.full_data_mle << " (" << study.failures << " failed subsamples)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-dimensional logistic regression: corrected MLE inference"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global random seed");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--cache-dir", g.cache_dir, "cache directory (HDLOGIT_CACHE overrides)");

  auto* sim = app.add_subcommand("simulate", "run a simulation study from a JSON config");
  std::string config_path;
  sim->add_option("config", config_path, "experiment config JSON")->required();

  auto* fr = app.add_subcommand("frontier", "build and cache the MLE existence frontier");
  std::string grid_text = "0.06:0.50:0.02", cache_path;
  int fr_n = 1000, fr_reps = 200;
  fr->add_option("--kappa-grid", grid_text, "kappa grid (lo:hi:step or comma list)");
  fr->add_option("--n", fr_n, "pilot sample size per probe");
  fr->add_option("--reps", fr_reps, "Monte Carlo repetitions per probability estimate");
  fr->add_option("--cache", cache_path, "cache file to write");

  auto* fit = app.add_subcommand("fit", "fit the logistic MLE with classical errors");
  std::string fit_data, fit_label = "y";
  bool fit_nocenter = false;
  fit->add_option("data", fit_data, "CSV dataset")->required();
  fit->add_option("--label-col", fit_label, "label column (name or index)");
  fit->add_flag("--no-center", fit_nocenter, "do not center covariate columns");

  auto* inf = app.add_subcommand("infer", "fit, probe the signal strength, emit adjusted inference");
  std::string inf_data, inf_label = "y", inf_tau = "rss", inf_frontier;
  double inf_level = 0.95;
  bool inf_lrt = false, inf_nocenter = false;
  inf->add_option("data", inf_data, "CSV dataset")->required();
  inf->add_option("--label-col", inf_label, "label column (name or index)");
  inf->add_option("--level", inf_level, "confidence level");
  inf->add_option("--tau", inf_tau, "conditional-sd estimator: rss or ar1")
      ->check(CLI::IsMember({"rss", "ar1"}));
  inf->add_flag("--lrt", inf_lrt, "also compute rescaled LRT p-values (one refit per column)");
  inf->add_flag("--no-center", inf_nocenter, "do not center covariate columns");
  inf->add_option("--frontier-cache", inf_frontier, "frontier cache file");

  auto* sub = app.add_subcommand("subsample-study", "subsample bias study for one coefficient");
  std::string sub_data, sub_label = "y", sub_var, sub_kappas = "0.1,0.18,0.26";
  int sub_b = 100;
  bool sub_nocenter = false;
  sub->add_option("data", sub_data, "CSV dataset")->required();
  sub->add_option("--label-col", sub_label, "label column (name or index)");
  sub->add_option("--variable", sub_var, "target variable (name or index)")->required();
  sub->add_option("--kappas", sub_kappas, "dimension ratios (comma list)");
  sub->add_option("--B", sub_b, "subsamples per kappa");
  sub->add_flag("--no-center", sub_nocenter, "do not center covariate columns");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(g, config_path);
    if (fr->parsed()) return cmd_frontier(g, grid_text, fr_n, fr_reps, cache_path);
    if (fit->parsed()) return cmd_fit(g, fit_data, fit_label, fit_nocenter);
    if (inf->parsed())
      return cmd_infer(g, inf_data, inf_label, inf_level, inf_tau, inf_lrt, inf_nocenter,
                       inf_frontier);
    if (sub->parsed())
      return cmd_subsample_study(g, sub_data, sub_label, sub_var, sub_kappas, sub_b, sub_nocenter);
  } catch (const ConfigError& e) {
    std::cerr << "config error in field '" << e.field << "': " << e.what() << "\n";
    return kExitConfig;
  } catch (const ProbeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind == ProbeError::Kind::already_separable ? kExitSeparable : kExitProbe;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
