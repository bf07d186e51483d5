#include "jointdr/glm/binary_mle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "jointdr/core/error.hpp"

namespace jointdr {
namespace {

// Rows with positive weight, compacted so zero-weight bootstrap rows cost nothing.
struct Compact {
  Eigen::MatrixXd x;
  Eigen::VectorXd label;
  Eigen::VectorXd weight;
};

void validate(const BinaryFitProblem& p) {
  const auto n = static_cast<std::size_t>(p.design.rows());
  if (p.labels.size() != n) throw InputError("fit_binary_mle: labels length differs from design rows");
  if (!p.weights.empty() && p.weights.size() != n) {
    throw InputError("fit_binary_mle: weights length differs from design rows");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.labels[i] > 1) throw InputError("fit_binary_mle: labels must be 0 or 1");
    const double w = p.weights.empty() ? 1.0 : p.weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("fit_binary_mle: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw InputError("fit_binary_mle: weights must have a positive sum");
}

Compact compact(const BinaryFitProblem& p) {
  const auto n = p.design.rows();
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.weights.empty() || p.weights[static_cast<std::size_t>(i)] > 0.0) ++m;
  }
  Compact c{Eigen::MatrixXd(m, p.design.cols()), Eigen::VectorXd(m), Eigen::VectorXd(m)};
  if (m == n) {
    c.x = p.design;
    for (Eigen::Index i = 0; i < n; ++i) {
      c.label[i] = p.labels[static_cast<std::size_t>(i)];
      c.weight[i] = p.weights.empty() ? 1.0 : p.weights[static_cast<std::size_t>(i)];
    }
    return c;
  }
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = p.weights.empty() ? 1.0 : p.weights[static_cast<std::size_t>(i)];
    if (w <= 0.0) continue;
    c.x.row(k) = p.design.row(i);
    c.label[k] = p.labels[static_cast<std::size_t>(i)];
    c.weight[k] = w;
    ++k;
  }
  return c;
}

}  // namespace

bool has_full_column_rank(const Eigen::MatrixXd& x) {
  if (x.rows() < x.cols()) return false;
  Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::VectorXd scale = gram.diagonal().cwiseSqrt();
  if ((scale.array() <= 0.0).any()) return false;
  gram = scale.cwiseInverse().asDiagonal() * gram * scale.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 1e-11 * eig.eigenvalues().maxCoeff();
}

namespace {

double loglik(const Compact& c, LinkFunction link, const Eigen::VectorXd& index) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < index.size(); ++i) {
    const double u = index[i];
    ll += c.weight[i] * (c.label[i] > 0.5 ? link.log_cdf(u) : link.log_ccdf(u));
  }
  return ll;
}

// Gradient of the log-likelihood (positive direction) and expected information.
void derivatives(const Compact& c, LinkFunction link, const Eigen::VectorXd& index,
                 Eigen::VectorXd& grad, Eigen::MatrixXd& info) {
  Eigen::VectorXd resid(index.size());
  Eigen::VectorXd info_w(index.size());
  for (Eigen::Index i = 0; i < index.size(); ++i) {
    const double u = index[i];
    // 1 - Λ from log space so the residual does not round to zero when Λ saturates.
    const double r = c.label[i] > 0.5 ? std::exp(link.log_ccdf(u)) : -std::exp(link.log_cdf(u));
    resid[i] = c.weight[i] * r * link.ratio(u);
    info_w[i] = c.weight[i] * link.information(u);
  }
  grad.noalias() = c.x.transpose() * resid;
  info.noalias() = c.x.transpose() * (c.x.array().colwise() * info_w.array()).matrix();
}

}  // namespace

double weighted_loglik(const BinaryFitProblem& problem, const Eigen::VectorXd& coef) {
  validate(problem);
  const Compact c = compact(problem);
  return loglik(c, problem.link, c.x * coef);
}

Eigen::VectorXd weighted_score(const BinaryFitProblem& problem, const Eigen::VectorXd& coef) {
  validate(problem);
  const Compact c = compact(problem);
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;
  derivatives(c, problem.link, c.x * coef, grad, info);
  return -grad;
}

BinaryFitResult fit_binary_mle(const BinaryFitProblem& problem, const BinaryFitConfig& config) {
  validate(problem);
  const Compact c = compact(problem);
  const LinkFunction link = problem.link;
  const auto p = c.x.cols();

  BinaryFitResult result;
  result.coef = Eigen::VectorXd::Zero(p);

  if ((c.label.array() > 0.5).all()) {
    result.status = FitStatus::DegenerateAllOne;
    return result;
  }
  if ((c.label.array() < 0.5).all()) {
    result.status = FitStatus::DegenerateAllZero;
    return result;
  }
  if (!has_full_column_rank(c.x)) {
    result.status = FitStatus::RankDeficient;
    return result;
  }

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd index = Eigen::VectorXd::Zero(c.x.rows());
  double ll = loglik(c, link, index);
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;

  result.status = FitStatus::MaxIterations;
  for (int it = 0; it < config.max_iter; ++it) {
    result.loglik_trace.push_back(ll);
    derivatives(c, link, index, grad, info);
    result.final_score_norm = grad.lpNorm<Eigen::Infinity>();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = ldlt.solve(grad);
    // Under separation the score vanishes while Newton steps stay O(1); keep
    // walking so the norm cap flags it.
    if (result.final_score_norm <= config.tol &&
        step.lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, coef.lpNorm<Eigen::Infinity>())) {
      result.status = FitStatus::Converged;
      break;
    }
    const Eigen::VectorXd step_index = c.x * step;

    // Near the optimum the gain g'H^-1 g falls below the rounding noise of the
    // summed log-likelihood, so ties within that noise count as ascent.
    const double noise = 1e-13 * std::max(1.0, std::abs(ll));
    std::optional<double> accepted;
    double t = 1.0;
    for (int h = 0; h <= config.max_halvings; ++h, t *= 0.5) {
      const double cand = loglik(c, link, index + t * step_index);
      if (std::isfinite(cand) && cand >= ll - noise) {
        accepted = cand;
        break;
      }
    }
    ++result.iterations;
    if (!accepted) break;
    coef += t * step;
    index += t * step_index;
    ll = *accepted;
    if (coef.norm() > config.coef_norm_cap) break;
  }
  if (result.status == FitStatus::MaxIterations) {
    // Iterate ended without a final score check (cap, stall or budget).
    derivatives(c, link, index, grad, info);
    result.final_score_norm = grad.lpNorm<Eigen::Infinity>();
  }
  result.loglik_trace.push_back(ll);
  result.coef = coef;
  result.loglik = ll;
  return result;
}

}  // namespace jointdr
