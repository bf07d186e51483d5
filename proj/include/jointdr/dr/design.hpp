#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace jointdr {

enum class ZEncoding { LinearScalar, Dummies };

/// Which rows feed the Y-equation. PositiveZ fits F_{Y|X,Z} on Z > 0 rows and
/// treats Y | Z = 0 as the point mass at 0 (Y is coded 0 without claims).
enum class YSample { All, PositiveZ };

std::string_view to_string(ZEncoding e);
std::string_view to_string(YSample s);
ZEncoding z_encoding_from_string(std::string_view name);
YSample y_sample_from_string(std::string_view name);

/// How raw covariate rows become regression features.
///
/// Features are the selected base columns (all columns when empty) followed by
/// the pairwise products listed in `interactions`.
struct DesignSpec {
  std::vector<std::size_t> base_covariates;
  std::vector<std::pair<std::size_t, std::size_t>> interactions;
  ZEncoding z_encoding = ZEncoding::LinearScalar;
  YSample y_sample = YSample::All;

  /// Throws InputError if a column index is out of range, an interaction
  /// touches the intercept or repeats, or a base column repeats.
  void validate(std::size_t covariate_count, std::optional<std::size_t> intercept_column) const;

  std::size_t feature_count(std::size_t covariate_count) const;
  void expand_row(std::span<const double> x, std::span<double> out) const;
  Eigen::MatrixXd expand(const Eigen::MatrixXd& x) const;

  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;
};

/// All products X(j)·X(k), j < k, over non-intercept columns; squares excluded.
std::vector<std::pair<std::size_t, std::size_t>> pairwise_interactions(
    std::size_t covariate_count, std::optional<std::size_t> intercept_column);

}  // namespace jointdr
