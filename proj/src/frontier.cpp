#include "hdlogit/frontier.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "hdlogit/covariance.hpp"
#include "hdlogit/link.hpp"
#include "hdlogit/rng.hpp"
#include "hdlogit/separability.hpp"

namespace hdlogit {

bool FrontierCurve::covers(double kappa) const {
  return knots.size() >= 2 && kappa >= knots.front().kappa && kappa <= knots.back().kappa;
}

double FrontierCurve::gamma_at(double kappa) const {
  if (!covers(kappa)) throw std::out_of_range("FrontierCurve: kappa outside knot range");
  for (size_t i = 1; i < knots.size(); ++i) {
    if (kappa <= knots[i].kappa) {
      const auto& a = knots[i - 1];
      const auto& b = knots[i];
      const double t = (kappa - a.kappa) / (b.kappa - a.kappa);
      return a.gamma + t * (b.gamma - a.gamma);
    }
  }
  return knots.back().gamma;
}

double mc_separability_prob(double kappa, double gamma, int n, int reps, std::uint64_t seed,
                            int threads) {
  if (reps < 1) throw std::invalid_argument("mc_separability_prob: reps must be >= 1");
  const int p = static_cast<int>(std::lround(kappa * n));
  if (p < 2 || p >= n) throw std::invalid_argument("mc_separability_prob: need 2 <= kappa*n < n");

  std::atomic<int> next{0};
  std::atomic<int> separable_count{0};
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(r));
      Eigen::MatrixXd x(n, p);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
      // single spike: beta = gamma * e_1, so the margin only involves column 0
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i)
        y(i) = rng.uniform() < rho_prime(gamma * x(i, 0)) ? 1.0 : -1.0;
      bool sep = false;
      try {
        sep = check_separable(x, y).separable;
      } catch (const IndeterminateSeparability&) {
        sep = false;  // counted as non-separable: no witness was found
      }
      if (sep) separable_count.fetch_add(1);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return static_cast<double>(separable_count.load()) / static_cast<double>(reps);
}

FrontierCurve build_frontier(const std::vector<double>& kappas, std::uint64_t seed,
                             const FrontierBuildOptions& opts) {
  FrontierCurve curve;
  curve.n = opts.n;
  curve.reps = opts.reps;
  curve.seed = seed;

  for (size_t ki = 0; ki < kappas.size(); ++ki) {
    const double kappa = kappas[ki];
    if (!(kappa > 0.0 && kappa <= 0.5)) {
      std::cerr << "frontier: skipping kappa=" << kappa << " outside (0, 0.5]\n";
      continue;
    }
    std::uint64_t eval_id = 0;
    auto prob = [&](double gamma) {
      const std::uint64_t s =
          RngStream::substream(seed, ki * 1000 + eval_id++).next_u64();
      return mc_separability_prob(kappa, gamma, opts.n, opts.reps, s, opts.threads);
    };

    double lo = 0.0;
    double plo = prob(lo);
    if (plo >= 0.5) {
      // the crossing has hit the gamma = 0 floor (happens at kappa = 0.5,
      // where pure-noise designs separate with probability 1/2)
      std::cerr << "frontier: kappa=" << kappa << " crosses at gamma=0\n";
      curve.knots.push_back({kappa, 0.0});
      continue;
    }
    double hi = 1.0;
    double phi = prob(hi);
    while (phi < 0.5 && hi < opts.gamma_max) {
      lo = hi;
      hi *= 2.0;
      phi = prob(hi);
    }
    if (phi < 0.5) {
      std::cerr << "frontier: kappa=" << kappa << " no crossing below gamma=" << opts.gamma_max
                << ", knot skipped\n";
      continue;
    }
    while (hi - lo > opts.gamma_resolution) {
      const double mid = 0.5 * (lo + hi);
      if (prob(mid) < 0.5)
        lo = mid;
      else
        hi = mid;
    }
    FrontierKnot knot;
    knot.kappa = kappa;
    knot.gamma = 0.5 * (lo + hi);
    curve.knots.push_back(knot);
    if (opts.verbose)
      std::cerr << "frontier: kappa=" << kappa << " gamma=" << knot.gamma << "\n";
  }

  // strict monotone-decreasing clip, floored at zero
  for (size_t i = 1; i < curve.knots.size(); ++i)
    if (curve.knots[i].gamma >= curve.knots[i - 1].gamma)
      curve.knots[i].gamma = std::max(0.0, curve.knots[i - 1].gamma - 1e-6);

  if (curve.knots.size() < 2) throw std::runtime_error("build_frontier: fewer than 2 knots built");
  return curve;
}

bool exists_mle(const TheoryInputs& in, const FrontierCurve& curve) {
  return in.gamma < curve.gamma_at(in.kappa);
}

void save_frontier(const FrontierCurve& curve, const std::string& path) {
  nlohmann::ordered_json j;
  j["schema"] = "hdlogit-frontier/1";
  j["seed"] = curve.seed;
  j["n"] = curve.n;
  j["reps"] = curve.reps;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& k : curve.knots)
    arr.push_back({{"kappa", k.kappa}, {"gamma", k.gamma}, {"n", curve.n}, {"reps", curve.reps}});
  j["knots"] = arr;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_frontier: cannot write " + path);
  out << j.dump(2) << "\n";
}

FrontierCurve load_frontier(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_frontier: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("schema", "") != "hdlogit-frontier/1")
    throw std::runtime_error("load_frontier: unknown schema in " + path);
  FrontierCurve curve;
  curve.seed = j.value("seed", 0ull);
  curve.n = j.value("n", 0);
  curve.reps = j.value("reps", 0);
  for (const auto& k : j.at("knots"))
    curve.knots.push_back({k.at("kappa").get<double>(), k.at("gamma").get<double>()});
  if (curve.knots.size() < 2) throw std::runtime_error("load_frontier: fewer than 2 knots");
  return curve;
}

}  // namespace hdlogit
