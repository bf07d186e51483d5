#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

#include "json.hpp"
#include "jointdr/core/dataset.hpp"
#include "jointdr/core/mc_quantile.hpp"
#include "jointdr/core/random.hpp"

namespace jointdr {

enum class DgpKind { PoissonGamma, GaussianCopula, TruncatedBivariateNormal };

/// How |S₂| becomes a count under the truncated bivariate normal design:
/// Ceil is Z = z for z - 1 < |S₂| ≤ z, Floor is Z = ⌊|S₂|⌋.
enum class CountReading { Ceil, Floor };

std::string_view to_string(DgpKind kind);
DgpKind dgp_kind_from_string(std::string_view name);
std::string_view to_string(CountReading r);
CountReading count_reading_from_string(std::string_view name);

inline constexpr double kCompareOverhead = 1.0;

/// Simulation design with X = (1, U₁, U₂, U₃), U_j iid standard uniform.
struct DgpSpec {
  DgpKind kind = DgpKind::PoissonGamma;
  Eigen::Vector4d beta{0.5, 1.0, 1.0, 1.0};
  Eigen::Vector4d gamma{0.5, -0.5, -0.5, -0.5};
  double delta = 0.2;   // Gamma dispersion (kinds 1, 2)
  double alpha = -0.5;  // Z coefficient in ln μ (kind 1)
  double eta = -0.5;    // copula correlation (kind 2)
  double var_s2 = 40.0;
  double cov = 5.0;
  CountReading reading = CountReading::Ceil;
  std::size_t n = 2000;
  std::uint64_t seed = 0;

  /// The designs numbered 1..3 with γ case 1 or 2.
  static DgpSpec preset(int design, int case_number, std::size_t n = 2000, std::uint64_t seed = 0);

  /// Throws InputError on invalid parameters.
  void validate() const;
};

/// (S₁, S₂) ~ N((x'β, x'γ), [[1, cov], [cov, var_s2]]) for the truncated bivariate normal design.
std::pair<double, double> draw_latent_normal(const DgpSpec& spec, std::span<const double> x, Rng& rng);

/// One (Y, Z) draw at covariate row x.
std::pair<double, int> draw_outcome(const DgpSpec& spec, std::span<const double> x, Rng& rng);

/// Row i uses the private stream substream(domain, i), so the sample does not
/// depend on how rows are grouped across workers.
Dataset generate(const DgpSpec& spec, std::size_t workers = 1);

struct TruthQuantiles {
  McQuantile q_y;
  McQuantile q_c;
};

inline constexpr std::size_t kDefaultTruthDraws = 1000000;

/// Monte Carlo tau-quantiles of Y and C = Y·Z + k·Z at x from the generating
/// law. Requires n_sim ≥ 10⁶.
TruthQuantiles truth_quantiles(const DgpSpec& spec, std::span<const double> x, double tau, double k,
                               std::size_t n_sim = kDefaultTruthDraws, std::uint64_t seed = 0,
                               std::size_t workers = 1);

/// Monte Carlo tau-quantile of C under the equal-weight mixture over the rows
/// of xs (n × 4); draw j uses row j mod n. Requires n_sim ≥ 10⁶.
McQuantile truth_cohort_cost_quantile(const DgpSpec& spec, const Eigen::MatrixXd& xs, double tau, double k,
                                      std::size_t n_sim = kDefaultTruthDraws, std::uint64_t seed = 0,
                                      std::size_t workers = 1);

nlohmann::json to_json(const DgpSpec& spec);
DgpSpec dgp_spec_from_json(const nlohmann::json& j);

}  // namespace jointdr
