#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "jointdr/baselines/models.hpp"
#include "jointdr/dgp/dgp.hpp"

namespace jointdr {

enum class Estimator { Dr, PoissonGamma, GaussianCopula, Truth };
std::string_view to_string(Estimator e);
Estimator estimator_from_string(std::string_view name);

struct CompareConfig {
  DgpSpec dgp{};
  std::size_t reps = 100;
  std::vector<Estimator> estimators{Estimator::Dr, Estimator::PoissonGamma, Estimator::GaussianCopula};
  std::vector<double> taus{0.95};
  std::vector<double> x1_values{0.25, 0.5, 0.75};  // x = (1, x1, 0.5, 0.5)
  double k = kCompareOverhead;
  std::size_t grid_quantiles = 100;
  bool dr_pairwise = true;
  CopulaEstimator copula_estimator = CopulaEstimator::SelectionAdjusted;
  std::size_t truth_draws = kDefaultTruthDraws;
  std::size_t parametric_draws = kDefaultParametricDraws;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  nlohmann::json to_json() const;
};

enum class Quantity { QY, QC };
std::string_view to_string(Quantity q);

struct CompareCell {
  Estimator estimator = Estimator::Dr;
  double x1 = 0.0;
  double tau = 0.0;
  Quantity quantity = Quantity::QY;
  double truth = 0.0;
  double truth_se = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  std::size_t reps = 0;      // replications that produced an estimate
  std::size_t failures = 0;  // replications whose fit threw
  std::vector<double> estimates;
};

struct CompareResult {
  std::vector<CompareCell> cells;
  const CompareCell& cell(Estimator e, double x1, double tau, Quantity q) const;
};

/// Monte Carlo comparison: per replication generate a sample, fit the
/// requested estimators, extract Q_Y(τ|x) and Q_C(τ|x) and score them against
/// truth_quantiles. Replication r uses DGP seed substream(seed, r); results do
/// not depend on the worker count.
CompareResult run_compare(const CompareConfig& config);

/// Columns: estimator,x1,tau,quantity,truth,truth_se,bias,mse,reps,failures.
void write_compare_csv(std::ostream& out, const CompareResult& result);

/// run_compare plus compare.csv and a manifest in `dir`.
CompareResult cmd_compare(const CompareConfig& config, const std::filesystem::path& dir);

}  // namespace jointdr
