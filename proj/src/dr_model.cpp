#include "jointdr/dr/dr_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jointdr/core/error.hpp"
#include "jointdr/core/parallel.hpp"

namespace jointdr {

namespace {

constexpr double kZeroPoint[1] = {0.0};

void check_x(std::span<const double> x, std::size_t d) {
  if (x.size() != d) {
    throw InputError("covariate vector has " + std::to_string(x.size()) + " entries, model expects " +
                     std::to_string(d));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("covariate vector is not finite");
  }
}

double slice_value(FitStatus status, LinkFunction link, double index) {
  switch (status) {
    case FitStatus::DegenerateAllZero: return 0.0;
    case FitStatus::DegenerateAllOne: return 1.0;
    default: return link.cdf(index);
  }
}

}  // namespace

double StepCdf::at(double y) const {
  auto it = std::upper_bound(points.begin(), points.end(), y);
  if (it == points.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - points.begin()) - 1];
}

std::vector<double> rearrange(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values;
}

DrModel::DrModel(CoefficientPath path, DrLinks links, std::vector<int> z_support, DesignSpec design,
                 std::size_t covariate_count, std::vector<int> dummy_levels)
    : path_(std::move(path)),
      links_(links),
      z_support_(std::move(z_support)),
      design_(std::move(design)),
      covariate_count_(covariate_count),
      dummy_levels_(std::move(dummy_levels)) {
  if (z_support_.empty()) throw InputError("DrModel: empty Z support");
  if (!std::is_sorted(z_support_.begin(), z_support_.end()) ||
      std::adjacent_find(z_support_.begin(), z_support_.end()) != z_support_.end()) {
    throw InputError("DrModel: Z support must be strictly increasing");
  }
  const std::size_t f = design_.feature_count(covariate_count_);
  const std::size_t zc = design_.z_encoding == ZEncoding::LinearScalar ? 1 : dummy_levels_.size();
  if (path_.z_columns != zc) throw InputError("DrModel: Z column count does not match the encoding");
  if (path_.y_coef.size() != path_.y_grid.size() || path_.y_status.size() != path_.y_grid.size()) {
    throw InputError("DrModel: Y coefficient path does not match its grid");
  }
  for (const auto& c : path_.y_coef) {
    if (static_cast<std::size_t>(c.size()) != f + zc) throw InputError("DrModel: Y coefficient length mismatch");
  }
  if (path_.z_grid.size() + 1 != z_support_.size() ||
      !std::equal(path_.z_grid.begin(), path_.z_grid.end(), z_support_.begin())) {
    throw InputError("DrModel: Z grid must be the support without its maximum");
  }
  if (path_.z_coef.size() != path_.z_grid.size() || path_.z_status.size() != path_.z_grid.size()) {
    throw InputError("DrModel: Z coefficient path does not match its grid");
  }
  for (const auto& c : path_.z_coef) {
    if (static_cast<std::size_t>(c.size()) != f) throw InputError("DrModel: Z coefficient length mismatch");
  }
}

bool DrModel::in_support(int z) const { return std::binary_search(z_support_.begin(), z_support_.end(), z); }

bool DrModel::pinned_zero_slice(int z) const { return z == 0 && design_.y_sample == YSample::PositiveZ; }

std::vector<double> DrModel::features(std::span<const double> x) const {
  check_x(x, covariate_count_);
  std::vector<double> out(design_.feature_count(covariate_count_));
  design_.expand_row(x, out);
  return out;
}

double DrModel::y_index(std::size_t j, std::span<const double> feats, int z) const {
  const Eigen::VectorXd& c = path_.y_coef[j];
  double idx = 0.0;
  for (std::size_t i = 0; i < feats.size(); ++i) idx += feats[i] * c[static_cast<Eigen::Index>(i)];
  const auto base = static_cast<Eigen::Index>(feats.size());
  if (design_.z_encoding == ZEncoding::LinearScalar) {
    idx += static_cast<double>(z) * c[base];
  } else {
    for (std::size_t k = 0; k < dummy_levels_.size(); ++k) {
      if (dummy_levels_[k] == z) idx += c[base + static_cast<Eigen::Index>(k)];
    }
  }
  return idx;
}

std::vector<double> DrModel::raw_y_values(std::span<const double> x, int z) const {
  if (!in_support(z)) throw InputError("z = " + std::to_string(z) + " is outside the fitted Z support");
  const auto feats = features(x);
  std::vector<double> out(path_.y_grid.size());
  if (pinned_zero_slice(z)) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = slice_value(path_.y_status[j], links_.y, y_index(j, feats, z));
  }
  return out;
}

StepCdf DrModel::y_slice(std::span<const double> x, int z) const {
  if (pinned_zero_slice(z)) {
    if (!in_support(z)) throw InputError("z = 0 is outside the fitted Z support");
    check_x(x, covariate_count_);
    return StepCdf{std::span<const double>(kZeroPoint), {1.0}};
  }
  return StepCdf{path_.y_grid.points(), rearrange(raw_y_values(x, z))};
}

std::vector<double> DrModel::raw_z_values(std::span<const double> x) const {
  const auto feats = features(x);
  std::vector<double> out(path_.z_grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Eigen::VectorXd& g = path_.z_coef[k];
    double idx = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i) idx += feats[i] * g[static_cast<Eigen::Index>(i)];
    out[k] = slice_value(path_.z_status[k], links_.z, idx);
  }
  return out;
}

std::vector<double> DrModel::z_cdf(std::span<const double> x) const {
  auto out = rearrange(raw_z_values(x));
  out.push_back(1.0);
  return out;
}

std::vector<double> DrModel::z_masses(std::span<const double> x) const {
  auto cdf = z_cdf(x);
  std::vector<double> out(cdf.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    out[k] = cdf[k] - prev;
    prev = cdf[k];
  }
  return out;
}

double eval_cdf_y(const DrModel& model, std::span<const double> x, int z, double y) {
  return model.y_slice(x, z).at(y);
}

double eval_cdf_z(const DrModel& model, std::span<const double> x, int z) {
  const auto& s = model.z_support();
  if (z < s.front()) {
    check_x(x, model.covariate_count());
    return 0.0;
  }
  if (z >= s.back()) {
    check_x(x, model.covariate_count());
    return 1.0;
  }
  const auto cdf = model.z_cdf(x);
  const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), z) - s.begin()) - 1;
  return cdf[k];
}

QuantileResult quantile_y(const DrModel& model, std::span<const double> x, int z, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("quantile level must lie in (0, 1)");
  const auto slice = model.y_slice(x, z);
  auto it = std::lower_bound(slice.values.begin(), slice.values.end(), tau);
  if (it == slice.values.end()) return {slice.points.back(), true};
  return {slice.points[static_cast<std::size_t>(it - slice.values.begin())], false};
}

ThresholdGrid default_y_grid(const Dataset& data, const DesignSpec& design, std::span<const double> probs) {
  if (design.y_sample == YSample::All) return build_grid(data.y(), probs);
  std::vector<double> pos;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.z()[i] > 0) pos.push_back(data.y()[i]);
  }
  if (pos.empty()) throw InputError("no rows with Z > 0 to build the Y grid from");
  return build_grid(pos, probs);
}

DrModel fit_dr(const Dataset& data, const ThresholdGrid& y_grid, const DesignSpec& design,
               const DrFitOptions& options) {
  const std::size_t n = data.size();
  const std::size_t d = data.covariate_count();
  design.validate(d, data.intercept_column());
  if (!options.weights.empty()) {
    if (options.weights.size() != n) throw InputError("weights must have one entry per row");
    for (double w : options.weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and non-negative");
    }
  }

  std::vector<int> support = options.z_support.empty() ? data.z_support() : options.z_support;
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  for (int z : data.z()) {
    if (!std::binary_search(support.begin(), support.end(), z)) {
      throw InputError("observed z = " + std::to_string(z) + " lies outside the declared Z support");
    }
  }

  const Eigen::MatrixXd feats = design.expand(data.x());
  const auto f = feats.cols();

  std::vector<std::size_t> y_rows;
  if (design.y_sample == YSample::PositiveZ) {
    for (std::size_t i = 0; i < n; ++i) {
      if (data.z()[i] > 0) {
        y_rows.push_back(i);
      } else if (data.y()[i] != 0.0) {
        throw InputError("positive_z Y sample requires Y = 0 whenever Z = 0 (row " + std::to_string(i + 1) + ")");
      }
    }
    if (y_rows.empty()) throw InputError("positive_z Y sample has no rows with Z > 0");
  } else {
    y_rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) y_rows[i] = i;
  }

  std::vector<int> dummy_levels;
  if (design.z_encoding == ZEncoding::Dummies) {
    for (int z : support) {
      if (design.y_sample == YSample::PositiveZ && z <= 0) continue;
      dummy_levels.push_back(z);
    }
    if (!dummy_levels.empty()) dummy_levels.erase(dummy_levels.begin());  // reference level
  }
  const Eigen::Index zc =
      design.z_encoding == ZEncoding::LinearScalar ? 1 : static_cast<Eigen::Index>(dummy_levels.size());

  const auto ny = static_cast<Eigen::Index>(y_rows.size());
  Eigen::MatrixXd y_design(ny, f + zc);
  std::vector<double> y_weights;
  std::vector<double> y_values(y_rows.size());
  for (Eigen::Index r = 0; r < ny; ++r) {
    const std::size_t i = y_rows[static_cast<std::size_t>(r)];
    y_design.row(r).head(f) = feats.row(static_cast<Eigen::Index>(i));
    const int z = data.z()[i];
    if (design.z_encoding == ZEncoding::LinearScalar) {
      y_design(r, f) = static_cast<double>(z);
    } else {
      for (Eigen::Index k = 0; k < zc; ++k) {
        y_design(r, f + k) = dummy_levels[static_cast<std::size_t>(k)] == z ? 1.0 : 0.0;
      }
    }
    y_values[static_cast<std::size_t>(r)] = data.y()[i];
  }
  if (!options.weights.empty()) {
    y_weights.resize(y_rows.size());
    for (std::size_t r = 0; r < y_rows.size(); ++r) y_weights[r] = options.weights[y_rows[r]];
  }

  CoefficientPath path{.y_grid = y_grid};
  path.z_grid.assign(support.begin(), support.end() - 1);
  path.z_columns = static_cast<std::size_t>(zc);
  const std::size_t nyt = y_grid.size();
  const std::size_t nzt = path.z_grid.size();
  path.y_coef.resize(nyt);
  path.y_status.resize(nyt);
  path.z_coef.resize(nzt);
  path.z_status.resize(nzt);

  parallel_for(nyt + nzt, options.workers, [&](std::size_t t) {
    std::vector<std::uint8_t> labels;
    BinaryFitResult res;
    std::string what;
    if (t < nyt) {
      const double g = y_grid[t];
      labels.resize(y_values.size());
      for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = y_values[r] <= g ? 1 : 0;
      res = fit_binary_mle({y_design, labels, y_weights, options.links.y}, options.solver);
      what = "Y threshold " + std::to_string(g);
      path.y_coef[t] = std::move(res.coef);
      path.y_status[t] = res.status;
    } else {
      const std::size_t k = t - nyt;
      const int zk = path.z_grid[k];
      labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = data.z()[i] <= zk ? 1 : 0;
      res = fit_binary_mle({feats, labels, options.weights, options.links.z}, options.solver);
      what = "Z threshold " + std::to_string(zk);
      path.z_coef[k] = std::move(res.coef);
      path.z_status[k] = res.status;
    }
    if (res.status == FitStatus::RankDeficient) {
      throw RankDeficientError("design is rank deficient at " + what);
    }
  });

  return DrModel(std::move(path), options.links, std::move(support), design, d, std::move(dummy_levels));
}

}  // namespace jointdr
