#include "jointdr/dr/design.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "jointdr/core/error.hpp"

namespace jointdr {

std::string_view to_string(ZEncoding e) { return e == ZEncoding::LinearScalar ? "linear" : "dummies"; }
std::string_view to_string(YSample s) { return s == YSample::All ? "all" : "positive_z"; }

ZEncoding z_encoding_from_string(std::string_view name) {
  if (name == "linear") return ZEncoding::LinearScalar;
  if (name == "dummies") return ZEncoding::Dummies;
  throw InputError("unknown z encoding '" + std::string(name) + "' (expected linear or dummies)");
}

YSample y_sample_from_string(std::string_view name) {
  if (name == "all") return YSample::All;
  if (name == "positive_z") return YSample::PositiveZ;
  throw InputError("unknown y sample '" + std::string(name) + "' (expected all or positive_z)");
}

void DesignSpec::validate(std::size_t covariate_count, std::optional<std::size_t> intercept_column) const {
  std::set<std::size_t> seen;
  for (auto c : base_covariates) {
    if (c >= covariate_count) throw InputError("design: base covariate index out of range");
    if (!seen.insert(c).second) throw InputError("design: duplicate base covariate");
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (auto [a, b] : interactions) {
    if (a >= covariate_count || b >= covariate_count) {
      throw InputError("design: interaction references a missing column");
    }
    if (intercept_column && (a == *intercept_column || b == *intercept_column)) {
      throw InputError("design: interactions must not involve the intercept");
    }
    if (!pairs.insert(std::minmax(a, b)).second) throw InputError("design: duplicate interaction pair");
  }
}

std::size_t DesignSpec::feature_count(std::size_t covariate_count) const {
  return (base_covariates.empty() ? covariate_count : base_covariates.size()) + interactions.size();
}

void DesignSpec::expand_row(std::span<const double> x, std::span<double> out) const {
  std::size_t k = 0;
  if (base_covariates.empty()) {
    for (double v : x) out[k++] = v;
  } else {
    for (auto c : base_covariates) out[k++] = x[c];
  }
  for (auto [a, b] : interactions) out[k++] = x[a] * x[b];
}

Eigen::MatrixXd DesignSpec::expand(const Eigen::MatrixXd& x) const {
  const auto d = static_cast<std::size_t>(x.cols());
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(feature_count(d)));
  Eigen::Index k = 0;
  if (base_covariates.empty()) {
    out.leftCols(x.cols()) = x;
    k = x.cols();
  } else {
    for (auto c : base_covariates) out.col(k++) = x.col(static_cast<Eigen::Index>(c));
  }
  for (auto [a, b] : interactions) {
    out.col(k++) = x.col(static_cast<Eigen::Index>(a)).cwiseProduct(x.col(static_cast<Eigen::Index>(b)));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> pairwise_interactions(
    std::size_t covariate_count, std::optional<std::size_t> intercept_column) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < covariate_count; ++a) {
    if (intercept_column && a == *intercept_column) continue;
    for (std::size_t b = a + 1; b < covariate_count; ++b) {
      if (intercept_column && b == *intercept_column) continue;
      out.emplace_back(a, b);
    }
  }
  return out;
}

}  // namespace jointdr
