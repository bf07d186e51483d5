#include "jointdr/core/grid.hpp"

#include <algorithm>
#include <cmath>

#include "jointdr/core/error.hpp"

namespace jointdr {

ThresholdGrid::ThresholdGrid(std::vector<double> points, GridSource source)
    : points_(std::move(points)), source_(std::move(source)) {}

ThresholdGrid ThresholdGrid::from_points(std::vector<double> points) {
  return from_points(std::move(points), ExplicitList{});
}

ThresholdGrid ThresholdGrid::from_points(std::vector<double> points, GridSource source) {
  if (points.empty()) throw InputError("threshold grid must contain at least one point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) throw InputError("threshold grid points must be finite");
    if (i > 0 && !(points[i] > points[i - 1])) {
      throw InputError("threshold grid points must be strictly increasing");
    }
  }
  return ThresholdGrid(std::move(points), std::move(source));
}

std::size_t ThresholdGrid::index_at_or_below(double y) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), y);
  if (it == points_.begin()) return npos;
  return static_cast<std::size_t>(it - points_.begin()) - 1;
}

std::size_t quantile_rank(double p, std::size_t n) {
  const double scaled = p * static_cast<double>(n);
  // 0.07 * 100 == 7.000000000000001 in binary floating point.
  const double rank = std::ceil(scaled - 1e-9 * std::max(1.0, scaled));
  return static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(n)));
}

ThresholdGrid build_grid(std::span<const double> values, std::span<const double> probs) {
  if (values.empty()) throw InputError("build_grid: values must be non-empty");
  if (probs.empty()) throw InputError("build_grid: probs must be non-empty");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0 && probs[i] <= 1.0)) throw InputError("build_grid: probs must lie in (0, 1]");
    if (i > 0 && !(probs[i] > probs[i - 1])) {
      throw InputError("build_grid: probs must be strictly increasing");
    }
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw InputError("build_grid: values must be finite");
  }
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> points;
  points.reserve(probs.size());
  for (double p : probs) {
    const double q = sorted[quantile_rank(p, sorted.size()) - 1];
    if (points.empty() || q > points.back()) points.push_back(q);
  }
  return ThresholdGrid(std::move(points),
                       EmpiricalQuantiles{std::vector<double>(probs.begin(), probs.end())});
}

std::vector<double> uniform_probs(std::size_t count) {
  std::vector<double> probs(count);
  for (std::size_t i = 0; i < count; ++i) {
    probs[i] = static_cast<double>(i + 1) / static_cast<double>(count);
  }
  return probs;
}

double empirical_quantile_inplace(std::span<double> values, double tau) {
  if (values.empty()) throw InputError("empirical_quantile: empty sample");
  if (!(tau > 0.0 && tau <= 1.0)) throw InputError("empirical_quantile: tau must lie in (0, 1]");
  const std::size_t k = quantile_rank(tau, values.size()) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

double empirical_quantile(std::span<const double> values, double tau) {
  std::vector<double> copy(values.begin(), values.end());
  return empirical_quantile_inplace(copy, tau);
}

}  // namespace jointdr
