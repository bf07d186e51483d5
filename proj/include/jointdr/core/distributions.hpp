#pragma once

#include "jointdr/core/random.hpp"

namespace jointdr::dist {

double normal_cdf(double x);
double normal_quantile(double p);
double normal_log_pdf(double x);
/// P(a < N <= b) for a standard normal N, accurate in both tails; a may be -inf, b may be +inf.
double normal_interval(double a, double b);

/// Gamma with mean `mean` and dispersion `dispersion`: shape 1/δ, scale μδ.
double gamma_cdf(double y, double mean, double dispersion);
double gamma_log_pdf(double y, double mean, double dispersion);
double gamma_quantile(double p, double mean, double dispersion);

double poisson_cdf(int k, double lambda);
double poisson_log_pmf(int k, double lambda);
/// P(Z > k), computed directly rather than as 1 - cdf.
double poisson_ccdf(int k, double lambda);
/// Smallest k with P(Z <= k) >= u.
int poisson_quantile(double u, double lambda);

double sample_normal(Rng& rng);
double sample_gamma(Rng& rng, double mean, double dispersion);
int sample_poisson(Rng& rng, double lambda);
double sample_exponential(Rng& rng);

}  // namespace jointdr::dist
