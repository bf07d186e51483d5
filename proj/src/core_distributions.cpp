#include "jointdr/core/distributions.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace jointdr::dist {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_log_pdf(double x) { return -0.5 * x * x - 0.91893853320467274178; }

double normal_interval(double a, double b) {
  if (!(b > a)) return 0.0;
  // Upper-tail difference right of zero.
  if (a > 0.0) return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
  return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
}

double gamma_cdf(double y, double mean, double dispersion) {
  if (y <= 0.0) return 0.0;
  return boost::math::gamma_p(1.0 / dispersion, y / (mean * dispersion));
}

double gamma_log_pdf(double y, double mean, double dispersion) {
  if (y <= 0.0) return -std::numeric_limits<double>::infinity();
  const double shape = 1.0 / dispersion;
  const double scale = mean * dispersion;
  return (shape - 1.0) * std::log(y) - y / scale - std::lgamma(shape) - shape * std::log(scale);
}

double gamma_quantile(double p, double mean, double dispersion) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::gamma_p_inv(1.0 / dispersion, p) * mean * dispersion;
}

double poisson_cdf(int k, double lambda) {
  if (k < 0) return 0.0;
  return boost::math::gamma_q(static_cast<double>(k) + 1.0, lambda);
}

double poisson_log_pmf(int k, double lambda) {
  if (k < 0) return -std::numeric_limits<double>::infinity();
  if (lambda == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return k * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0);
}

double poisson_ccdf(int k, double lambda) {
  if (k < 0) return 1.0;
  if (lambda <= 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(k) + 1.0, lambda);
}

int poisson_quantile(double u, double lambda) {
  if (lambda <= 0.0) return 0;
  double log_pmf = -lambda;
  double cdf = std::exp(log_pmf);
  int k = 0;
  const double log_lambda = std::log(lambda);
  while (cdf < u) {
    ++k;
    log_pmf += log_lambda - std::log(static_cast<double>(k));
    const double add = std::exp(log_pmf);
    if (add == 0.0 && k > lambda) break;
    cdf += add;
    if (k > 100000) break;
  }
  return k;
}

double sample_normal(Rng& rng) { return boost::random::normal_distribution<double>(0.0, 1.0)(rng); }

double sample_gamma(Rng& rng, double mean, double dispersion) {
  return boost::random::gamma_distribution<double>(1.0 / dispersion, mean * dispersion)(rng);
}

int sample_poisson(Rng& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  return boost::random::poisson_distribution<int, double>(lambda)(rng);
}

double sample_exponential(Rng& rng) { return boost::random::exponential_distribution<double>(1.0)(rng); }

}  // namespace jointdr::dist
