#include "jointdr/joint/joint_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jointdr/core/error.hpp"
#include "jointdr/core/format.hpp"
#include "jointdr/core/parallel.hpp"

namespace jointdr {

namespace {

constexpr Eigen::Index kRowBlock = 2048;

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("probability level must lie in (0, 1)");
}

std::vector<double> row_of(const Eigen::MatrixXd& xs, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(xs.cols()));
  for (Eigen::Index j = 0; j < xs.cols(); ++j) r[static_cast<std::size_t>(j)] = xs(i, j);
  return r;
}

}  // namespace

double MixedCdf::at(double v) const {
  if (v < 0.0) return 0.0;
  auto it = std::upper_bound(points.begin(), points.end(), v);
  if (it == points.begin()) return atom_at_zero;
  return values[static_cast<std::size_t>(it - points.begin()) - 1];
}

JointTable::JointTable(std::vector<int> support, std::vector<double> mass, std::vector<std::vector<double>> points,
                       std::vector<std::vector<double>> cumulative)
    : support_(std::move(support)), mass_(std::move(mass)), points_(std::move(points)), cumulative_(std::move(cumulative)) {
  const auto k = support_.size();
  if (k == 0 || mass_.size() != k || points_.size() != k || cumulative_.size() != k) {
    throw InputError("JointTable: inconsistent sizes");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (points_[i].empty() || points_[i].size() != cumulative_[i].size()) {
      throw InputError("JointTable: slice points and masses differ in length");
    }
  }
}

template <class Le>
double JointTable::slice_mass(std::size_t k, Le le) const {
  const auto& p = points_[k];
  const auto n = static_cast<std::size_t>(std::partition_point(p.begin(), p.end(), le) - p.begin());
  return n == 0 ? 0.0 : cumulative_[k][n - 1];
}

double JointTable::zero_mass() const {
  return !support_.empty() && support_.front() == 0 ? mass_.front() : 0.0;
}

double JointTable::joint_cdf(double y, int z) const {
  if (!std::binary_search(support_.begin(), support_.end(), z)) {
    throw InputError("z = " + std::to_string(z) + " is outside the Z support");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < support_.size() && support_[k] <= z; ++k) {
    s += slice_mass(k, [y](double g) { return g <= y; });
  }
  return s;
}

double JointTable::marginal_y_cdf(double y) const { return joint_cdf(y, support_.back()); }

double JointTable::z_cdf(int z) const {
  double s = 0.0;
  for (std::size_t k = 0; k < support_.size() && support_[k] <= z; ++k) s += mass_[k];
  return std::min(s, 1.0);
}

double JointTable::y_given_positive_z_cdf(double y) const {
  const double denom = 1.0 - zero_mass();
  if (!(denom > 0.0)) throw NumericalError("P(Z > 0) is zero; Y given Z > 0 is undefined");
  double num = 0.0;
  for (std::size_t k = 0; k < support_.size(); ++k) {
    if (support_[k] > 0) num += slice_mass(k, [y](double g) { return g <= y; });
  }
  return num / denom;
}

double JointTable::total_cost_cdf(double c, double k) const {
  if (c < 0.0) return 0.0;
  const double atom = zero_mass();
  if (c == 0.0) return atom;
  double s = atom;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const int z = support_[i];
    if (z <= 0) continue;
    const double zd = static_cast<double>(z);
    // Compare in the cost domain so breakpoints z(g + k) are hit exactly.
    s += slice_mass(i, [zd, k, c](double g) { return zd * (g + k) <= c; });
  }
  return s;
}

double JointTable::aggregate_claim_cdf(double s) const {
  if (s < 0.0) throw InputError("aggregate claim argument must be non-negative");
  return total_cost_cdf(s, 0.0);
}

std::vector<double> JointTable::cost_breakpoints(double k) const {
  std::vector<double> b{0.0};
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const int z = support_[i];
    if (z <= 0) continue;
    for (double g : points_[i]) {
      const double c = static_cast<double>(z) * (g + k);
      if (c > 0.0) b.push_back(c);
    }
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

QuantileResult JointTable::var(double tau, double k) const {
  check_tau(tau);
  if (k < 0.0) throw InputError("overhead k must be non-negative");
  const auto b = cost_breakpoints(k);
  std::size_t lo = 0, hi = b.size();  // first index with F >= tau lies in [lo, hi]
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (total_cost_cdf(b[mid], k) >= tau) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  if (lo == b.size()) return {b.back(), true};
  return {b[lo], false};
}

QuantileResult JointTable::marginal_y_quantile(double tau) const {
  check_tau(tau);
  std::vector<double> cand;
  for (const auto& p : points_) cand.insert(cand.end(), p.begin(), p.end());
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  auto it = std::partition_point(cand.begin(), cand.end(), [&](double y) { return marginal_y_cdf(y) < tau; });
  if (it == cand.end()) return {cand.back(), true};
  return {*it, false};
}

MixedCdf JointTable::total_cost_distribution(double k) const {
  MixedCdf out;
  out.atom_at_zero = zero_mass();
  auto b = cost_breakpoints(k);
  out.points.assign(b.begin() + 1, b.end());
  out.values.reserve(out.points.size());
  for (double c : out.points) out.values.push_back(total_cost_cdf(c, k));
  return out;
}

MixedCdf JointTable::aggregate_claim_distribution() const { return total_cost_distribution(0.0); }

JointModel::JointModel(DrModel dr, double overhead_k) : dr_(std::move(dr)), k_(overhead_k) {
  if (!(k_ >= 0.0) || !std::isfinite(k_)) throw InputError("overhead k must be finite and non-negative");
  for (int z : dr_.z_support()) {
    if (dr_.pinned_zero_slice(z)) {
      slice_points_.push_back({0.0});
    } else {
      const auto p = dr_.y_grid().points();
      slice_points_.emplace_back(p.begin(), p.end());
    }
  }
}

std::size_t JointModel::flat_size() const {
  std::size_t n = slice_points_.size();
  for (const auto& p : slice_points_) n += p.size();
  return n;
}

void JointModel::flatten_row(std::span<const double> x, std::span<double> out) const {
  const auto masses = dr_.z_masses(x);
  const auto& support = dr_.z_support();
  std::copy(masses.begin(), masses.end(), out.begin());
  std::size_t off = masses.size();
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto slice = dr_.y_slice(x, support[k]);
    for (double v : slice.values) out[off++] = masses[k] * v;
  }
}

JointTable JointModel::unflatten(std::span<const double> flat) const {
  const auto K = slice_points_.size();
  std::vector<double> mass(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(K));
  std::vector<std::vector<double>> cum(K);
  std::size_t off = K;
  for (std::size_t k = 0; k < K; ++k) {
    const auto len = slice_points_[k].size();
    cum[k].assign(flat.begin() + static_cast<std::ptrdiff_t>(off), flat.begin() + static_cast<std::ptrdiff_t>(off + len));
    // Guard against ulp-level non-monotonicity introduced by averaging.
    for (std::size_t j = 1; j < len; ++j) cum[k][j] = std::max(cum[k][j], cum[k][j - 1]);
    off += len;
  }
  return JointTable(dr_.z_support(), std::move(mass), slice_points_, std::move(cum));
}

JointTable JointModel::at(std::span<const double> x) const {
  std::vector<double> flat(flat_size());
  flatten_row(x, flat);
  return unflatten(flat);
}

std::vector<JointTable> JointModel::average_many(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& row_weights,
                                                 std::size_t workers) const {
  const Eigen::Index n = xs.rows();
  if (n == 0) throw InputError("cannot average over an empty set of rows");
  if (row_weights.rows() != n) throw InputError("row weights must have one row per covariate row");
  if (!row_weights.allFinite() || (row_weights.array() < 0.0).any()) {
    throw InputError("row weights must be finite and non-negative");
  }
  const Eigen::RowVectorXd totals = row_weights.colwise().sum();
  if ((totals.array() <= 0.0).any()) throw InputError("every weight column needs a positive sum");

  const auto L = static_cast<Eigen::Index>(flat_size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(L, row_weights.cols());
  Eigen::MatrixXd block;
  for (Eigen::Index start = 0; start < n; start += kRowBlock) {
    const Eigen::Index len = std::min(kRowBlock, n - start);
    block.resize(len, L);
    parallel_for(static_cast<std::size_t>(len), workers, [&](std::size_t r) {
      const auto i = start + static_cast<Eigen::Index>(r);
      std::vector<double> flat(static_cast<std::size_t>(L));
      flatten_row(row_of(xs, i), flat);
      for (Eigen::Index c = 0; c < L; ++c) block(static_cast<Eigen::Index>(r), c) = flat[static_cast<std::size_t>(c)];
    });
    acc.noalias() += block.transpose() * row_weights.middleRows(start, len);
  }
  std::vector<JointTable> out;
  out.reserve(static_cast<std::size_t>(row_weights.cols()));
  for (Eigen::Index b = 0; b < row_weights.cols(); ++b) {
    const Eigen::VectorXd col = acc.col(b) / totals[b];
    out.push_back(unflatten(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))));
  }
  return out;
}

JointTable JointModel::average(const Eigen::MatrixXd& xs, std::span<const double> weights, std::size_t workers) const {
  Eigen::MatrixXd w(xs.rows(), 1);
  if (weights.empty()) {
    w.setOnes();
  } else {
    if (weights.size() != static_cast<std::size_t>(xs.rows())) throw InputError("one weight per row is required");
    for (Eigen::Index i = 0; i < xs.rows(); ++i) w(i, 0) = weights[static_cast<std::size_t>(i)];
  }
  return std::move(average_many(xs, w, workers).front());
}

double joint_cdf(const JointModel& m, std::span<const double> x, double y, int z) { return m.at(x).joint_cdf(y, z); }

double aggregate_claim_cdf(const JointModel& m, std::span<const double> x, double s) {
  return m.at(x).aggregate_claim_cdf(s);
}

double total_cost_cdf(const JointModel& m, std::span<const double> x, double c) {
  return m.at(x).total_cost_cdf(c, m.overhead_k());
}

QuantileResult var(const JointModel& m, std::span<const double> x, double tau) {
  return m.at(x).var(tau, m.overhead_k());
}

double population_average(const JointModel& m, const Eigen::MatrixXd& xs,
                          const std::function<double(const JointTable&)>& f, std::size_t workers) {
  if (xs.rows() == 0) throw InputError("population_average needs at least one row");
  return deterministic_mean(static_cast<std::size_t>(xs.rows()), workers, [&](std::size_t i) {
    return f(m.at(row_of(xs, static_cast<Eigen::Index>(i))));
  });
}

std::string x_key(std::span<const double> x) { return hex64(fnv1a(x)); }

void write_query_csv(std::ostream& out, std::span<const QueryRow> rows) {
  out << "query_type,key,argument,value\n";
  for (const auto& r : rows) {
    out << csv_field(r.query_type) << ',' << csv_field(r.key) << ',' << format_double(r.argument) << ','
        << format_double(r.value) << '\n';
  }
}

}  // namespace jointdr
