#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <vector>

#include "jointdr/core/grid.hpp"

namespace jointdr {

enum class FitStatus { Converged, DegenerateAllZero, DegenerateAllOne, MaxIterations, RankDeficient };

std::string_view to_string(FitStatus status);
FitStatus fit_status_from_string(std::string_view name);

/// Fitted maps y -> (α(y), β(y)) and z -> γ(z) over their threshold grids.
///
/// Each Y-threshold coefficient vector is laid out as [β (covariate features), α
/// (Z columns)]; `z_columns` says how many trailing entries belong to α (1 for
/// the linear-scalar encoding, one per dummy otherwise).
struct CoefficientPath {
  ThresholdGrid y_grid;
  std::vector<int> z_grid{};  // sorted support of Z without its maximum
  std::size_t z_columns = 1;
  std::vector<Eigen::VectorXd> y_coef{};
  std::vector<FitStatus> y_status{};
  std::vector<Eigen::VectorXd> z_coef{};
  std::vector<FitStatus> z_status{};

  Eigen::VectorXd alpha(std::size_t j) const { return y_coef[j].tail(static_cast<Eigen::Index>(z_columns)); }
  Eigen::VectorXd beta(std::size_t j) const {
    return y_coef[j].head(y_coef[j].size() - static_cast<Eigen::Index>(z_columns));
  }
  const Eigen::VectorXd& gamma(std::size_t k) const { return z_coef[k]; }
};

}  // namespace jointdr
