#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "jointdr/core/coefficient_path.hpp"
#include "jointdr/core/dataset.hpp"
#include "jointdr/core/grid.hpp"
#include "jointdr/core/link.hpp"
#include "jointdr/dr/design.hpp"
#include "jointdr/glm/binary_mle.hpp"

namespace jointdr {

struct DrLinks {
  LinkFunction y{LinkKind::Logit};
  LinkFunction z{LinkKind::Logit};
};

/// A right-continuous step CDF: values[j] holds on [points[j], points[j+1]).
struct StepCdf {
  std::span<const double> points;
  std::vector<double> values;

  /// 0 below the first point.
  double at(double y) const;
};

struct QuantileResult {
  double value = 0.0;
  bool saturated = false;  // the CDF never reached tau on its grid
};

/// Sorts probabilities ascending: on a fixed grid the monotone rearrangement of
/// a step function is the sorted vector of its values.
std::vector<double> rearrange(std::vector<double> values);

/// Fitted distribution regressions F(y | x, z) = Λ(z α(y) + x'β(y)) and
/// F(z | x) = Λ(x'γ(z)), evaluated with per-point rearrangement.
class DrModel {
 public:
  /// `dummy_levels` lists the Z levels that own a dummy column (Dummies encoding only).
  DrModel(CoefficientPath path, DrLinks links, std::vector<int> z_support, DesignSpec design,
          std::size_t covariate_count, std::vector<int> dummy_levels = {});

  const CoefficientPath& path() const { return path_; }
  const DrLinks& links() const { return links_; }
  const ThresholdGrid& y_grid() const { return path_.y_grid; }
  const std::vector<int>& z_support() const { return z_support_; }
  const DesignSpec& design() const { return design_; }
  std::size_t covariate_count() const { return covariate_count_; }
  const std::vector<int>& dummy_levels() const { return dummy_levels_; }

  bool in_support(int z) const;
  /// True when Y | Z = 0 is the point mass at zero rather than a fitted slice.
  bool pinned_zero_slice(int z) const;

  /// Λ(index) per Y-threshold before rearrangement; degenerate thresholds give 0/1.
  std::vector<double> raw_y_values(std::span<const double> x, int z) const;
  /// Rearranged Y-slice at (x, z).
  StepCdf y_slice(std::span<const double> x, int z) const;

  /// Λ(x'γ(z)) per Z-threshold (support without its maximum) before rearrangement.
  std::vector<double> raw_z_values(std::span<const double> x) const;
  /// Rearranged F(z | x) over the support; the last entry is exactly 1.
  std::vector<double> z_cdf(std::span<const double> x) const;
  /// p(z | x) = F(z | x) - F(z- | x) over the support.
  std::vector<double> z_masses(std::span<const double> x) const;

 private:
  std::vector<double> features(std::span<const double> x) const;
  double y_index(std::size_t j, std::span<const double> feats, int z) const;

  CoefficientPath path_;
  DrLinks links_;
  std::vector<int> z_support_;
  DesignSpec design_;
  std::size_t covariate_count_;
  std::vector<int> dummy_levels_;
};

struct DrFitOptions {
  DrLinks links{};
  std::span<const double> weights{};  // empty: unit weights
  std::vector<int> z_support{};       // empty: observed support of Z
  BinaryFitConfig solver{};
  std::size_t workers = 1;
};

/// Fits one binary regression per Y-threshold (labels 1{Y <= y}, design [X, Z])
/// and per Z-threshold except the support maximum (labels 1{Z <= z}, design X).
/// Throws RankDeficientError if any threshold design loses rank.
DrModel fit_dr(const Dataset& data, const ThresholdGrid& y_grid, const DesignSpec& design,
               const DrFitOptions& options = {});

double eval_cdf_y(const DrModel& model, std::span<const double> x, int z, double y);
/// Step CDF of Z: 0 below the support, 1 at or above its maximum.
double eval_cdf_z(const DrModel& model, std::span<const double> x, int z);
/// Smallest grid point with F(y | x, z) >= tau; saturated (max grid point) when none.
QuantileResult quantile_y(const DrModel& model, std::span<const double> x, int z, double tau);

/// Empirical quantiles of Y at `probs`, restricted to Z > 0 rows when the
/// design fits the Y-equation on those rows.
ThresholdGrid default_y_grid(const Dataset& data, const DesignSpec& design, std::span<const double> probs);

}  // namespace jointdr
