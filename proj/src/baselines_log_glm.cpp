#include "jointdr/baselines/log_glm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "jointdr/core/error.hpp"
#include "jointdr/glm/binary_mle.hpp"

namespace jointdr {

namespace {

double weight_at(std::span<const double> w, Eigen::Index i) { return w.empty() ? 1.0 : w[static_cast<std::size_t>(i)]; }

double loglik(LogLinkFamily fam, const Eigen::VectorXd& eta, std::span<const double> y, std::span<const double> w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double yi = y[static_cast<std::size_t>(i)];
    const double t = fam == LogLinkFamily::Poisson ? yi * eta[i] - std::exp(eta[i]) : -yi * std::exp(-eta[i]) - eta[i];
    s += weight_at(w, i) * t;
  }
  return s;
}

}  // namespace

LogGlmFit fit_log_link_glm(LogLinkFamily family, const Eigen::MatrixXd& x, std::span<const double> y,
                           std::span<const double> weights, const LogGlmConfig& config) {
  const auto n = x.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw InputError("log-link GLM: response length differs from design");
  if (!weights.empty() && weights.size() != y.size()) throw InputError("log-link GLM: weights length mismatch");
  double sw = 0.0, swy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weight_at(weights, i), yi = y[static_cast<std::size_t>(i)];
    if (!(w >= 0.0) || !std::isfinite(yi) || yi < 0.0) throw InputError("log-link GLM: invalid weight or response");
    if (family == LogLinkFamily::Gamma && w > 0.0 && !(yi > 0.0)) {
      throw InputError("Gamma GLM requires strictly positive responses");
    }
    sw += w;
    swy += w * yi;
  }
  if (!(sw > 0.0) || !(swy > 0.0)) throw InputError("log-link GLM: weighted mean response must be positive");

  Eigen::MatrixXd xw = x;
  if (!weights.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights[static_cast<std::size_t>(i)] == 0.0) xw.row(i).setZero();
    }
  }
  if (!has_full_column_rank(xw)) throw RankDeficientError("log-link GLM design is rank deficient");

  // Start from the constant fit ln(mean y), projected onto the design.
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(n, std::log(swy / sw));
  Eigen::VectorXd coef = x.colPivHouseholderQr().solve(target);
  Eigen::VectorXd eta = x * coef;
  double ll = loglik(family, eta, y, weights);

  LogGlmFit fit;
  for (int it = 0; it < config.max_iter; ++it) {
    Eigen::VectorXd resid(n), info_w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = weight_at(weights, i), yi = y[static_cast<std::size_t>(i)];
      if (family == LogLinkFamily::Poisson) {
        const double mu = std::exp(eta[i]);
        resid[i] = w * (yi - mu);
        info_w[i] = w * mu;
      } else {
        resid[i] = w * (yi * std::exp(-eta[i]) - 1.0);
        info_w[i] = w;
      }
    }
    const Eigen::VectorXd score = x.transpose() * resid;
    const Eigen::MatrixXd info = x.transpose() * (x.array().colwise() * info_w.array()).matrix();
    fit.score_norm = score.lpNorm<Eigen::Infinity>();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = ldlt.solve(score);
    if (fit.score_norm <= config.tol && step.lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, coef.lpNorm<Eigen::Infinity>())) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd step_eta = x * step;
    const double noise = 1e-13 * std::max(1.0, std::abs(ll));
    std::optional<double> accepted;
    double t = 1.0;
    for (int h = 0; h <= config.max_halvings; ++h, t *= 0.5) {
      const double cand = loglik(family, eta + t * step_eta, y, weights);
      if (std::isfinite(cand) && cand >= ll - noise) {
        accepted = cand;
        break;
      }
    }
    ++fit.iterations;
    if (!accepted) break;
    coef += t * step;
    eta += t * step_eta;
    ll = *accepted;
  }
  fit.coef = coef;
  return fit;
}

double pearson_dispersion(const Eigen::MatrixXd& x, std::span<const double> y, const Eigen::VectorXd& coef,
                          std::span<const double> weights) {
  const Eigen::VectorXd eta = x * coef;
  double num = 0.0, sw = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double w = weight_at(weights, i);
    const double mu = std::exp(eta[i]);
    const double r = (y[static_cast<std::size_t>(i)] - mu) / mu;
    num += w * r * r;
    sw += w;
  }
  const double dof = sw - static_cast<double>(x.cols());
  if (!(dof > 0.0)) throw InputError("Pearson dispersion needs more weighted rows than coefficients");
  return num / dof;
}

}  // namespace jointdr
