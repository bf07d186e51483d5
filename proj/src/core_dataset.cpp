#include "jointdr/core/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "jointdr/core/error.hpp"
#include "jointdr/core/format.hpp"

namespace jointdr {

Dataset::Dataset(Eigen::MatrixXd x, std::vector<double> y, std::vector<int> z,
                 std::vector<std::string> covariate_names, bool require_intercept)
    : x_(std::move(x)),
      y_(std::move(y)),
      z_(std::move(z)),
      names_(std::move(covariate_names)),
      require_intercept_(require_intercept) {
  const auto n = y_.size();
  if (n == 0) throw InputError("dataset must contain at least one row");
  if (z_.size() != n || static_cast<std::size_t>(x_.rows()) != n) {
    throw InputError("dataset columns differ in length");
  }
  if (x_.cols() == 0) throw InputError("dataset needs at least one covariate column");
  if (names_.size() != static_cast<std::size_t>(x_.cols())) {
    throw InputError("covariate_names must label every column of x");
  }
  if (!x_.allFinite()) throw InputError("covariates must be finite");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i])) throw InputError("Y must be finite (row " + std::to_string(i) + ")");
    if (z_[i] < 0) throw InputError("Z must be non-negative (row " + std::to_string(i) + ")");
  }

  std::size_t ones = 0;
  for (Eigen::Index j = 0; j < x_.cols(); ++j) {
    if ((x_.col(j).array() == 1.0).all()) {
      if (!intercept_) intercept_ = static_cast<std::size_t>(j);
      ++ones;
    }
  }
  if (require_intercept_ && ones != 1) {
    throw InputError("expected exactly one constant-one intercept column, found " +
                     std::to_string(ones));
  }
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> r(static_cast<std::size_t>(x_.cols()));
  for (Eigen::Index j = 0; j < x_.cols(); ++j) r[static_cast<std::size_t>(j)] = x_(static_cast<Eigen::Index>(i), j);
  return r;
}

std::vector<int> Dataset::z_support() const {
  std::vector<int> s(z_.begin(), z_.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
  std::vector<double> y(rows.size());
  std::vector<int> z(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= size()) throw InputError("subset row index out of range");
    x.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(rows[k]));
    y[k] = y_[rows[k]];
    z[k] = z_[rows[k]];
  }
  return Dataset(std::move(x), std::move(y), std::move(z), names_, require_intercept_);
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.names_ == b.names_ && a.y_ == b.y_ && a.z_ == b.z_ && a.x_.rows() == b.x_.rows() &&
         a.x_.cols() == b.x_.cols() && a.x_ == b.x_;
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto icpt = data.intercept_column();
  const auto cols = static_cast<Eigen::Index>(data.covariate_count());
  out << "y,z";
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (icpt && static_cast<Eigen::Index>(*icpt) == j) continue;
    out << ',' << csv_field(data.covariate_names()[static_cast<std::size_t>(j)]);
  }
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_double(data.y()[i]) << ',' << data.z()[i];
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (icpt && static_cast<Eigen::Index>(*icpt) == j) continue;
      out << ',' << format_double(data.x()(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

}  // namespace jointdr
