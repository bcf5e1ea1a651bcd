#pragma once

#include <cmath>

namespace hdlogit {

// rho(t) = log(1 + e^t) and its first two derivatives, in overflow-safe form.
inline double rho(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double rho_prime(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double rho_second(double t) {
  const double s = rho_prime(t);
  return s * (1.0 - s);
}

// prox_{lambda*rho}(z): unique root t of lambda*rho'(t) + t - z = 0.
// Safeguarded Newton on the bracket [z - lambda, z].
inline double prox_logistic(double lambda, double z) {
  if (lambda == 0.0) return z;
  double lo = z - lambda, hi = z;
  double t = z - lambda * rho_prime(z);  // first Newton-ish guess
  if (t < lo || t > hi) t = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double g = lambda * rho_prime(t) + t - z;
    if (std::fabs(g) <= 1e-12) return t;
    if (g > 0.0)
      hi = t;
    else
      lo = t;
    const double dg = lambda * rho_second(t) + 1.0;
    double tn = t - g / dg;
    if (tn <= lo || tn >= hi) tn = 0.5 * (lo + hi);
    t = tn;
  }
  return t;
}

}  // namespace hdlogit
