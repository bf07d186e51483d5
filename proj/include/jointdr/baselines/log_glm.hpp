#pragma once

#include <Eigen/Dense>
#include <span>

namespace jointdr {

enum class LogLinkFamily { Poisson, Gamma };

struct LogGlmConfig {
  double tol = 1e-8;  // sup-norm of the score
  int max_iter = 100;
  int max_halvings = 30;
};

struct LogGlmFit {
  Eigen::VectorXd coef;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
};

/// Weighted log-link GLM, ln E[y | x] = x'b, by Fisher scoring with step halving.
///
/// Poisson maximizes Σ w (y x'b - e^{x'b}) with score Σ w (y - μ) x; Gamma
/// maximizes the dispersion-free Σ w (-y/μ - x'b) with score Σ w (y/μ - 1) x.
/// Throws RankDeficientError for a rank-deficient design and InputError when
/// the weighted mean response is not positive. Empty weights mean unit weights.
LogGlmFit fit_log_link_glm(LogLinkFamily family, const Eigen::MatrixXd& x, std::span<const double> y,
                           std::span<const double> weights = {}, const LogGlmConfig& config = {});

/// Σ w ((y - μ)/μ)² / (Σ w - p), the Pearson moment estimator of the Gamma dispersion.
double pearson_dispersion(const Eigen::MatrixXd& x, std::span<const double> y, const Eigen::VectorXd& coef,
                          std::span<const double> weights = {});

}  // namespace jointdr
