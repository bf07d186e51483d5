#pragma once

#include <Eigen/Dense>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "jointdr/core/grid.hpp"
#include "jointdr/dr/dr_model.hpp"

namespace jointdr {

/// Distribution with an atom at zero and a step CDF over positive values.
struct MixedCdf {
  double atom_at_zero = 0.0;
  std::vector<double> points;  // strictly increasing, > 0
  std::vector<double> values;  // non-decreasing, atom_at_zero <= values[0]

  /// 0 below zero, the atom on [0, points[0]), then right-continuous steps.
  double at(double v) const;
};

/// Joint law of (Y, Z) given X, averaged over one or more covariate rows.
///
/// For each support value z the table stores P(Z = z) and the cumulative
/// masses P(Y <= y_j, Z = z) on that slice's points. Every query (joint CDF,
/// aggregate claim S = YZ, total cost C = YZ + kZ, VaR) is linear in these
/// numbers, so a cohort table is exactly the row average of per-row tables.
class JointTable {
 public:
  JointTable(std::vector<int> support, std::vector<double> mass, std::vector<std::vector<double>> points,
             std::vector<std::vector<double>> cumulative);

  const std::vector<int>& support() const { return support_; }
  const std::vector<double>& mass() const { return mass_; }
  const std::vector<double>& points(std::size_t k) const { return points_[k]; }
  const std::vector<double>& cumulative(std::size_t k) const { return cumulative_[k]; }

  /// P(Z = 0); zero when 0 is not in the support.
  double zero_mass() const;
  /// Σ_{z' <= z} P(Y <= y, Z = z'); throws InputError if z is not a support point.
  double joint_cdf(double y, int z) const;
  /// P(Y <= y) marginally over Z.
  double marginal_y_cdf(double y) const;
  double z_cdf(int z) const;
  /// P(Y <= y | Z > 0) = Σ_{z>0} P(Y <= y, Z = z) / (1 - P(Z = 0)).
  double y_given_positive_z_cdf(double y) const;
  /// F_S(s) with S = YZ: P(Z = 0) at s = 0, else P(Z = 0) + Σ_{z>0} P(Y <= s/z, Z = z).
  double aggregate_claim_cdf(double s) const;
  /// F_C(c) with C = YZ + kZ: P(Z = 0) + Σ_{z>0} P(Y <= c/z - k, Z = z); 0 for c < 0.
  double total_cost_cdf(double c, double k) const;

  /// inf{c : F_C(c) >= tau} over the exact breakpoints {0} ∪ {z(g + k)}.
  QuantileResult var(double tau, double k) const;
  /// inf{y : P(Y <= y) >= tau} over the slice points.
  QuantileResult marginal_y_quantile(double tau) const;

  MixedCdf aggregate_claim_distribution() const;
  MixedCdf total_cost_distribution(double k) const;

 private:
  // Cumulative mass of slice k at the last point satisfying `le` (monotone in the point).
  template <class Le>
  double slice_mass(std::size_t k, Le le) const;
  std::vector<double> cost_breakpoints(double k) const;

  std::vector<int> support_;
  std::vector<double> mass_;
  std::vector<std::vector<double>> points_;
  std::vector<std::vector<double>> cumulative_;
};

/// A fitted DR model plus the per-claim overhead k used for total cost.
class JointModel {
 public:
  static constexpr double kDefaultOverhead = 200.0;

  explicit JointModel(DrModel dr, double overhead_k = kDefaultOverhead);

  const DrModel& dr() const { return dr_; }
  double overhead_k() const { return k_; }

  /// Table at a single covariate point (rearranged slices and point masses).
  JointTable at(std::span<const double> x) const;
  /// Weighted row average of per-row tables (uniform when weights is empty).
  JointTable average(const Eigen::MatrixXd& xs, std::span<const double> weights = {}, std::size_t workers = 1) const;
  /// One averaged table per column of `row_weights` (rows × B), e.g. bootstrap
  /// resamples of the cohort rows. Each column is normalized by its sum.
  std::vector<JointTable> average_many(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& row_weights,
                                       std::size_t workers = 1) const;

 private:
  // Flattened per-row table: [mass(support) | cumulative(slice 0) | cumulative(slice 1) | ...].
  std::size_t flat_size() const;
  void flatten_row(std::span<const double> x, std::span<double> out) const;
  JointTable unflatten(std::span<const double> flat) const;

  DrModel dr_;
  double k_;
  std::vector<std::vector<double>> slice_points_;
};

double joint_cdf(const JointModel& m, std::span<const double> x, double y, int z);
double aggregate_claim_cdf(const JointModel& m, std::span<const double> x, double s);
double total_cost_cdf(const JointModel& m, std::span<const double> x, double c);
QuantileResult var(const JointModel& m, std::span<const double> x, double tau);

/// Mean of f over the rows of xs, with summation order fixed by row index.
double population_average(const JointModel& m, const Eigen::MatrixXd& xs,
                          const std::function<double(const JointTable&)>& f, std::size_t workers = 1);

struct QueryRow {
  std::string query_type;
  std::string key;  // x-hash or cohort id
  double argument = 0.0;
  double value = 0.0;
};

/// Hex FNV-1a of the covariate vector's bytes.
std::string x_key(std::span<const double> x);
void write_query_csv(std::ostream& out, std::span<const QueryRow> rows);

}  // namespace jointdr
