#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "jointdr/core/dataset.hpp"
#include "jointdr/core/mc_quantile.hpp"
#include "jointdr/core/random.hpp"

namespace jointdr {

/// Z | X ~ Poisson(exp(x'γ)); Y | Z, X ~ Gamma(mean exp(zα + x'β), dispersion δ).
/// Y is 0 when Z = 0.
struct PoissonGammaModel {
  Eigen::VectorXd gamma_coefs;
  Eigen::VectorXd severity_coefs;  // [α, β']
  double dispersion = 1.0;

  double lambda(std::span<const double> x) const;
  double mu(std::span<const double> x, int z) const;
};

struct PoissonGammaOptions {
  bool severity_on_z = true;  // false fixes α = 0 and fits the severity on X alone
};

/// Poisson GLM on all rows, Gamma GLM on Z > 0 rows with design [Z, X], Pearson dispersion.
PoissonGammaModel fit_poisson_gamma(const Dataset& data, const PoissonGammaOptions& options = {});

/// Margins Y | X ~ Gamma(exp(x'β), δ), Z | X ~ Poisson(exp(x'γ)) joined by a
/// Gaussian copula with correlation η. Y is 0 when Z = 0.
struct GaussianCopulaModel {
  Eigen::VectorXd marg_y_coefs;
  double dispersion = 1.0;
  Eigen::VectorXd marg_z_coefs;
  double eta = 0.0;
  std::size_t clamped_rows = 0;  // rows whose F_Y was clamped to [1e-10, 1 - 1e-10] at the optimum

  double lambda(std::span<const double> x) const;
  double mu(std::span<const double> x) const;
};

enum class CopulaEstimator {
  Ifm,                // Gamma GLM on Z > 0 rows, then η by golden section
  SelectionAdjusted,  // from the IFM start, maximize the Z > 0 likelihood jointly over (β, δ, η)
};

std::string_view to_string(CopulaEstimator e);
CopulaEstimator copula_estimator_from_string(std::string_view name);

struct CopulaFitOptions {
  CopulaEstimator estimator = CopulaEstimator::SelectionAdjusted;
};

GaussianCopulaModel fit_gaussian_copula(const Dataset& data, const CopulaFitOptions& options = {});

/// Σ over Z > 0 rows of ln f_Y(y|x) + ln P(Z = z | Y = y, x) under the model.
double copula_loglik(const GaussianCopulaModel& model, const Dataset& data);

/// Positive rows whose F_Y(y|x) falls outside [1e-10, 1 - 1e-10] and is clamped.
std::size_t copula_clamped_rows(const GaussianCopulaModel& model, const Dataset& data);

/// Gaussian copula C_η(u, v) by adaptive quadrature.
double copula_cdf(double u, double v, double eta);

/// Bivariate draws (Y, Z) at covariate row x. `latent_y` keeps the severity
/// drawn before zeroing on Z = 0.
struct BaselineDraws {
  std::vector<double> latent_y;
  std::vector<double> y;
  std::vector<int> z;
};

using BaselineModel = std::variant<PoissonGammaModel, GaussianCopulaModel>;

/// n draws in blocks of 10000, block b on stream substream(seed-domain, b);
/// identical for every worker count.
BaselineDraws simulate(const BaselineModel& model, std::span<const double> x, std::size_t n, std::uint64_t seed,
                       std::size_t workers = 1);

struct ParametricQuantiles {
  McQuantile q_y;
  McQuantile q_c;
};

inline constexpr std::size_t kDefaultParametricDraws = 200000;

/// Monte Carlo tau-quantiles of Y and C = Y·Z + k·Z at x. Requires n_sim ≥ 10⁴.
ParametricQuantiles parametric_quantiles(const BaselineModel& model, std::span<const double> x, double tau, double k,
                                         std::size_t n_sim = kDefaultParametricDraws, std::uint64_t seed = 0,
                                         std::size_t workers = 1);

/// Σ_i P(Z = z | x_i) for each z in `z_values` under ln λ = x'γ.
std::vector<double> poisson_fitted_counts(const Eigen::VectorXd& gamma_coefs, const Eigen::MatrixXd& x,
                                          std::span<const int> z_values);

nlohmann::json to_json(const PoissonGammaModel& model);
nlohmann::json to_json(const GaussianCopulaModel& model);
PoissonGammaModel poisson_gamma_from_json(const nlohmann::json& j);
GaussianCopulaModel gaussian_copula_from_json(const nlohmann::json& j);

}  // namespace jointdr
