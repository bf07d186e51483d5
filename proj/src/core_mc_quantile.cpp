#include "jointdr/core/mc_quantile.hpp"

#include <cmath>
#include <vector>

#include "jointdr/core/error.hpp"
#include "jointdr/core/grid.hpp"

namespace jointdr {

McQuantile mc_quantile(std::span<const double> draws, double tau, std::size_t sections) {
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("tau must lie in (0, 1)");
  if (sections < 2 || draws.size() < sections) throw InputError("too few draws for the requested sections");
  McQuantile out;
  out.value = empirical_quantile(draws, tau);
  const std::size_t len = draws.size() / sections;
  std::vector<double> q(sections);
  double mean = 0.0;
  for (std::size_t s = 0; s < sections; ++s) {
    q[s] = empirical_quantile(draws.subspan(s * len, len), tau);
    mean += q[s];
  }
  mean /= static_cast<double>(sections);
  double ss = 0.0;
  for (double v : q) ss += (v - mean) * (v - mean);
  const double m = static_cast<double>(sections);
  out.se = std::sqrt(ss / (m - 1.0) / m);
  return out;
}

}  // namespace jointdr
