#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "jointdr/baselines/models.hpp"
#include "jointdr/bootstrap/bootstrap.hpp"
#include "jointdr/cli/io.hpp"
#include "jointdr/core/link.hpp"
#include "jointdr/dgp/dgp.hpp"
#include "jointdr/dr/design.hpp"
#include "jointdr/dr/dr_model.hpp"

namespace jointdr {

inline constexpr const char* kVersion = "0.1.0";

enum class EvalSet { Train, Validation, All };
std::string_view to_string(EvalSet s);
EvalSet eval_set_from_string(std::string_view name);

struct RunConfig {
  std::filesystem::path input;
  ColumnMapping columns{};
  LinkKind y_link = LinkKind::Logit;
  LinkKind z_link = LinkKind::Logit;
  std::size_t grid_quantiles = 1000;  // probabilities 1/m, ..., 1 of Y
  std::vector<double> grid_points{};  // explicit Y-grid; overrides grid_quantiles
  bool pairwise_interactions = false;
  ZEncoding z_encoding = ZEncoding::LinearScalar;
  std::string y_sample = "auto";  // auto | all | positive_z
  double overhead_k = 200.0;
  WeightKind bootstrap_scheme = WeightKind::EmpiricalMultinomial;
  std::size_t bootstrap_replicates = 300;
  std::uint64_t bootstrap_seed = 0;
  bool bootstrap_refit = false;  // refit the model per replicate instead of resampling evaluation rows
  std::optional<double> train_fraction{};
  std::uint64_t split_seed = 0;
  std::filesystem::path split_index_file{};
  EvalSet eval_set = EvalSet::Train;
  std::filesystem::path output_dir = "out";
  std::size_t workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Ingested data with its train/validation partition (both equal all rows without a split).
struct PreparedData {
  Dataset data;
  Split split;
  Dataset train() const { return data.subset(split.train); }
  Dataset validation() const { return data.subset(split.validation); }
  Dataset eval(EvalSet s) const;
};

PreparedData prepare_data(const RunConfig& config);

/// PositiveZ when configured, or under "auto" when some Z = 0 rows exist and all of them have Y = 0.
DesignSpec design_for(const RunConfig& config, const Dataset& train);

/// Writes manifest_<command>.json with the config, its FNV-1a hash, the seed,
/// library versions and an FNV-1a digest of every output file.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                    std::uint64_t seed, const std::vector<std::filesystem::path>& outputs);

struct FitOutput {
  DrModel model;
  std::optional<PoissonGammaModel> poisson_gamma;
  std::optional<GaussianCopulaModel> copula;
  nlohmann::json report;
};

/// Fits the DR model on the training rows; with `baselines` also the two
/// parametric models. Writes model.json, fit_report.json and, when fitted,
/// poisson_gamma.json and gaussian_copula.json.
FitOutput cmd_fit(const RunConfig& config, bool baselines = false);

double chi_square(std::span<const double> observed, std::span<const double> fitted);

struct GofRow {
  std::string model;
  int z = 0;
  double observed = 0.0;
  double fitted = 0.0;
};

struct GofOutput {
  std::vector<GofRow> rows;
  std::map<std::string, double> chi_square;
};

/// Observed versus fitted Z frequencies on the evaluation rows. "dr" sums the
/// fitted F̂(z | x_i) before rearrangement, "dr_rearranged" the rearranged
/// masses; baselines use the Poisson masses. Writes gof.csv.
GofOutput cmd_gof(const RunConfig& config, const DrModel& model, const PoissonGammaModel* pg = nullptr,
                  const GaussianCopulaModel* copula = nullptr);
GofOutput gof_table(const Dataset& data, const DrModel& model, const PoissonGammaModel* pg = nullptr,
                    const GaussianCopulaModel* copula = nullptr, std::size_t workers = 1);

struct VarRow {
  std::string cohort;
  std::size_t rows = 0;
  double tau = 0.0;
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;  // standard deviation of the bootstrap replicates
  std::size_t replicates = 0;
  std::size_t flagged = 0;
  bool saturated = false;
};

/// Cohort VaR of the total cost with percentile bootstrap intervals (level 0.95).
/// By default replicates reweight the cohort's evaluation rows; with
/// bootstrap_refit each replicate refits the model on reweighted training rows.
/// Writes var.csv.
std::vector<VarRow> cmd_var(const RunConfig& config, const DrModel& model, const std::vector<Cohort>& cohorts,
                            const std::vector<double>& taus);

enum class CdfTarget { YGivenPositiveZ, SPositive, C };
std::string_view to_string(CdfTarget t);
CdfTarget cdf_target_from_string(std::string_view name);

struct CdfRow {
  double argument = 0.0;
  double model_cdf = 0.0;
  double empirical_cdf = 0.0;
};

/// Model CDF over the evaluation rows next to the empirical CDF of those rows'
/// outcomes. For Y | Z > 0 and S | S > 0 the per-row conditional CDFs are
/// averaged with weights P(Z > 0 | x_i) and P(S > 0 | x_i), the pooled law the
/// empirical column estimates. Writes cdf_<target>.csv.
std::vector<CdfRow> cmd_cdf(const RunConfig& config, const DrModel& model, CdfTarget target);
std::vector<CdfRow> cdf_table(const Dataset& data, const DrModel& model, CdfTarget target, double k,
                              std::size_t workers = 1);

/// Writes the generated sample as CSV plus a manifest.
void cmd_simulate(const DgpSpec& spec, const std::filesystem::path& output_csv, std::size_t workers = 1);

}  // namespace jointdr
