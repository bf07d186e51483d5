#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <variant>
#include <vector>

namespace jointdr {

struct ExplicitList {
  friend bool operator==(const ExplicitList&, const ExplicitList&) = default;
};
struct EmpiricalQuantiles {
  std::vector<double> probs;
  friend bool operator==(const EmpiricalQuantiles&, const EmpiricalQuantiles&) = default;
};
using GridSource = std::variant<ExplicitList, EmpiricalQuantiles>;

/// Strictly increasing cutoffs at which an outcome is discretized.
class ThresholdGrid {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  /// Throws InputError unless `points` is non-empty, finite and strictly increasing.
  static ThresholdGrid from_points(std::vector<double> points);
  /// Same validation, keeping a recorded source (used when deserializing).
  static ThresholdGrid from_points(std::vector<double> points, GridSource source);

  std::span<const double> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  double operator[](std::size_t i) const { return points_[i]; }
  const GridSource& source() const { return source_; }

  /// Index of the largest point <= y, or npos when y lies below the grid.
  std::size_t index_at_or_below(double y) const;

  friend bool operator==(const ThresholdGrid&, const ThresholdGrid&) = default;

 private:
  ThresholdGrid(std::vector<double> points, GridSource source);
  friend ThresholdGrid build_grid(std::span<const double>, std::span<const double>);

  std::vector<double> points_;
  GridSource source_;
};

/// Deduplicated empirical quantiles of `values` at `probs`.
///
/// The p-quantile is the order statistic of rank ceil(p·n) (inverse-CDF
/// convention), so p = 1 always yields max(values). `probs` must be strictly
/// increasing in (0, 1].
ThresholdGrid build_grid(std::span<const double> values, std::span<const double> probs);

/// {1/count, 2/count, ..., 1}; count = 100 gives 1%..100%, 1000 gives 0.1%..100%.
std::vector<double> uniform_probs(std::size_t count);

/// Order statistic of rank ceil(tau·n) of an unsorted sample; the sample is not modified.
double empirical_quantile(std::span<const double> values, double tau);

/// Same as empirical_quantile but partially reorders `values` in place.
double empirical_quantile_inplace(std::span<double> values, double tau);

/// Rank ceil(p·n) clamped to [1, n], tolerant of p·n landing a few ulps above an integer.
std::size_t quantile_rank(double p, std::size_t n);

}  // namespace jointdr
