#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace jointdr {

/// Immutable columnar sample {(X_i, Y_i, Z_i)}.
///
/// X carries an explicit intercept column. Y is the continuous outcome, Z the
/// discrete one (non-negative integers with finite support).
class Dataset {
 public:
  /// Validates shapes and values; throws InputError on violation. With
  /// `require_intercept` exactly one column of x must be identically one.
  Dataset(Eigen::MatrixXd x, std::vector<double> y, std::vector<int> z,
          std::vector<std::string> covariate_names, bool require_intercept = true);

  std::size_t size() const { return y_.size(); }
  std::size_t covariate_count() const { return static_cast<std::size_t>(x_.cols()); }

  const Eigen::MatrixXd& x() const { return x_; }
  std::span<const double> y() const { return y_; }
  std::span<const int> z() const { return z_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  std::optional<std::size_t> intercept_column() const { return intercept_; }

  /// Covariate row i as a contiguous vector.
  std::vector<double> row(std::size_t i) const;

  /// Sorted distinct values of Z.
  std::vector<int> z_support() const;

  /// Rows in the given order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  Eigen::MatrixXd x_;
  std::vector<double> y_;
  std::vector<int> z_;
  std::vector<std::string> names_;
  std::optional<std::size_t> intercept_;
  bool require_intercept_ = true;
};

/// Canonical CSV: header "y,z,<covariates>" without the intercept column,
/// doubles in shortest round-trip form.
void write_csv(std::ostream& out, const Dataset& data);

}  // namespace jointdr
