#pragma once

namespace hdlogit {

// Standard normal CDF, survival function and quantile.
double norm_cdf(double t);
double norm_sf(double t);
double norm_quantile(double p);

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper tail of a chi-squared distribution with (possibly fractional) df.
double chisq_sf(double x, double df);
// Quantile of chi-squared (bisection on chisq_sf; used in tests and reports).
double chisq_quantile(double p, double df);

}  // namespace hdlogit
