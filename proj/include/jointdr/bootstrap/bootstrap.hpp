#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointdr/core/dataset.hpp"
#include "jointdr/core/grid.hpp"
#include "jointdr/dr/dr_model.hpp"
#include "jointdr/joint/joint_model.hpp"

namespace jointdr {

/// Unit gives W ≡ 1 (every replicate reproduces the point estimate); it exists for testing.
enum class WeightKind { EmpiricalMultinomial, BayesianExponential, Unit };

std::string_view to_string(WeightKind kind);
WeightKind weight_kind_from_string(std::string_view name);

struct WeightScheme {
  WeightKind kind = WeightKind::EmpiricalMultinomial;
  std::uint64_t seed = 0;
};

/// Exchangeable weights for replicate `replicate`, drawn from a private Philox
/// stream keyed by (seed, replicate). Multinomial weights are the counts of n
/// uniform draws over n rows; Bayesian weights are unit exponentials divided by
/// their sample mean.
std::vector<double> draw_weights(const WeightScheme& scheme, std::size_t n, std::size_t replicate);

/// Rows × B matrix whose column b is draw_weights(scheme, n, b).
Eigen::MatrixXd draw_weight_matrix(const WeightScheme& scheme, std::size_t n, std::size_t replicates);

using Functional = std::function<std::vector<double>(const JointModel&)>;

struct BootstrapConfig {
  WeightScheme scheme{};
  std::size_t replicates = 300;
  std::size_t workers = 1;
  double overhead_k = JointModel::kDefaultOverhead;
  DrFitOptions fit{};  // weights and z_support are set per replicate
};

enum class ReplicateFlag : std::uint8_t { None = 0, LostZLevel = 1, MaxIterations = 2, RankDeficient = 4 };

struct BootstrapResult {
  std::vector<double> point;
  std::vector<std::vector<double>> replicates;  // B rows; NaN where the refit failed
  std::vector<std::uint8_t> flags;              // ReplicateFlag bits per replicate
  WeightScheme scheme{};

  std::size_t flagged_count() const;
  /// Replicate values of functional component j, optionally without flagged replicates.
  std::vector<double> component(std::size_t j, bool exclude_flagged = false) const;
};

/// Refits the full DR pipeline (threshold fits and rearrangement) under each
/// replicate's weights and evaluates `functional` on the resulting JointModel.
/// Replicates run concurrently; output is identical for every worker count.
BootstrapResult bootstrap_fit(const Dataset& data, const ThresholdGrid& y_grid, const DesignSpec& design,
                              const BootstrapConfig& config, const Functional& functional);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile interval: order statistics of rank ceil(p·B) at p = (1 ∓ level)/2.
/// NaN entries are dropped first; at least 20 values must remain.
Interval percentile_ci(std::span<const double> replicates, double level);

struct EnsembleSummaryRow {
  std::string functional_id;
  double point = 0.0;
  Interval ci{};
  std::size_t replicates = 0;
  std::size_t flagged = 0;
  std::uint64_t seed = 0;
};

void write_ensemble_csv(std::ostream& out, std::span<const EnsembleSummaryRow> rows);

}  // namespace jointdr
