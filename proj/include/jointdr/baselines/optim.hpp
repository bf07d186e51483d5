#pragma once

#include <Eigen/Dense>
#include <functional>

namespace jointdr {

/// Maximizer of a unimodal f on [lo, hi] by golden-section search.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-8);

struct NelderMeadConfig {
  double initial_step = 0.1;
  double f_tol = 1e-10;  // stop when the simplex's value spread falls below this
  double x_tol = 1e-8;   // ... and its diameter below this
  int max_evals = 4000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimizes f from x0 with the standard (1, 2, 0.5, 0.5) Nelder–Mead moves.
/// Non-finite values are treated as +inf.
NelderMeadResult nelder_mead_min(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                                 const NelderMeadConfig& config = {});

}  // namespace jointdr
