#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdlogit/fixed_point.hpp"

namespace hdlogit {

struct FrontierKnot {
  double kappa = 0.0;
  double gamma = 0.0;  // estimated g_MLE(kappa)
};

// Piecewise-linear MLE-existence boundary estimated by Monte Carlo; knots are
// strictly decreasing in gamma after the isotonic clip.
struct FrontierCurve {
  std::vector<FrontierKnot> knots;
  int n = 0;
  int reps = 0;
  std::uint64_t seed = 0;

  bool covers(double kappa) const;
  double gamma_at(double kappa) const;  // linear interpolation between knots
};

// Fraction of reps in which an i.i.d. N(0,1) design with p = round(kappa*n)
// and a single-spike signal of strength gamma is completely separable.
// Runs reps in parallel on `threads` workers; the result does not depend on
// the schedule.
double mc_separability_prob(double kappa, double gamma, int n, int reps, std::uint64_t seed,
                            int threads = 1);

struct FrontierBuildOptions {
  int n = 1000;
  int reps = 200;
  double gamma_resolution = 0.05;  // bisection stops when the bracket is this wide
  double gamma_max = 64.0;
  int threads = 1;
  bool verbose = false;
};

// For each kappa, bisection over gamma to the 0.5 separability probability,
// then a strict monotone-decreasing clip. Knots whose bracket fails are
// skipped with a warning on stderr.
FrontierCurve build_frontier(const std::vector<double>& kappas, std::uint64_t seed,
                             const FrontierBuildOptions& opts = {});

// true iff gamma < curve(kappa), strictly; throws if kappa is not covered.
bool exists_mle(const TheoryInputs& in, const FrontierCurve& curve);

void save_frontier(const FrontierCurve& curve, const std::string& path);
FrontierCurve load_frontier(const std::string& path);

}  // namespace hdlogit
