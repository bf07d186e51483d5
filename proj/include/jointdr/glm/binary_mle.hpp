#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "jointdr/core/coefficient_path.hpp"
#include "jointdr/core/link.hpp"

namespace jointdr {

/// Weighted binary-response likelihood Σ W_i [l_i ln Λ(x_i'b) + (1-l_i) ln(1-Λ(x_i'b))].
///
/// The problem is a view: design, labels and weights are borrowed so one design
/// can be shared by every threshold of a distribution regression. Empty
/// `weights` means unit weights.
struct BinaryFitProblem {
  Eigen::Ref<const Eigen::MatrixXd> design;
  std::span<const std::uint8_t> labels;
  std::span<const double> weights;
  LinkFunction link;
};

struct BinaryFitConfig {
  double tol = 1e-8;  // sup-norm of the weighted score
  int max_iter = 100;
  int max_halvings = 30;
  double coef_norm_cap = 1e3;
};

struct BinaryFitResult {
  Eigen::VectorXd coef;
  FitStatus status = FitStatus::Converged;
  int iterations = 0;
  double final_score_norm = 0.0;
  double loglik = 0.0;
  std::vector<double> loglik_trace;  // value at the start of every iteration, then the final one
};

/// Newton ascent from coef = 0 with step halving.
///
/// Constant weighted labels short-circuit to DegenerateAllZero/AllOne with a
/// zero coefficient vector. A design without full column rank on the
/// positive-weight rows yields RankDeficient. Exhausting max_iter, failing to
/// find an ascent step, or crossing the coefficient-norm cap (quasi-separation)
/// yields MaxIterations with the last iterate.
BinaryFitResult fit_binary_mle(const BinaryFitProblem& problem, const BinaryFitConfig& config = {});

/// Column rank check on the scaled Gram matrix (smallest eigenvalue > 1e-11 × largest).
bool has_full_column_rank(const Eigen::MatrixXd& x);

double weighted_loglik(const BinaryFitProblem& problem, const Eigen::VectorXd& coef);

/// Σ_i W_i [Λ(x_i'b) - l_i] R(x_i'b) x_i, the negative gradient of weighted_loglik.
Eigen::VectorXd weighted_score(const BinaryFitProblem& problem, const Eigen::VectorXd& coef);

}  // namespace jointdr
