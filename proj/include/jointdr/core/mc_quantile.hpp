#pragma once

#include <cstddef>
#include <span>

namespace jointdr {

struct McQuantile {
  double value = 0.0;
  double se = 0.0;  // batch-means standard error
};

/// Empirical tau-quantile of `draws` with a standard error from the spread of
/// the same quantile over `sections` contiguous equal sections.
McQuantile mc_quantile(std::span<const double> draws, double tau, std::size_t sections = 20);

}  // namespace jointdr
