#include "jointdr/baselines/models.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "jointdr/baselines/log_glm.hpp"
#include "jointdr/baselines/optim.hpp"
#include "jointdr/core/distributions.hpp"
#include "jointdr/core/error.hpp"
#include "jointdr/core/parallel.hpp"
#include "jointdr/dr/serialize.hpp"

namespace jointdr {

using nlohmann::json;

namespace {

constexpr double kClampLo = 1e-10;
constexpr double kClampHi = 1.0 - 1e-10;
constexpr double kEtaBound = 0.99;
constexpr std::size_t kBlock = 10000;
constexpr std::uint64_t kSimDomain = 0x5e1a7b0c;

double dot(const Eigen::VectorXd& c, std::span<const double> x) {
  if (static_cast<std::size_t>(c.size()) != x.size()) throw InputError("covariate row length differs from model");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += c[static_cast<Eigen::Index>(j)] * x[j];
  return s;
}

/// Φ⁻¹ of a probability given both its value and its complement, using the smaller one.
double probit(double p, double q) {
  return p <= 0.5 ? dist::normal_quantile(p) : -dist::normal_quantile(q);
}

std::vector<std::size_t> positive_rows(const Dataset& data) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.z()[i] > 0) rows.push_back(i);
  }
  if (rows.empty()) throw InputError("baseline fit needs at least one row with Z > 0");
  return rows;
}

Eigen::VectorXd poisson_part(const Dataset& data) {
  const auto z = data.z();
  std::vector<double> zd(z.begin(), z.end());
  return fit_log_link_glm(LogLinkFamily::Poisson, data.x(), zd).coef;
}

struct SeverityData {
  Eigen::MatrixXd x;
  std::vector<double> y;
};

SeverityData severity_rows(const Dataset& data, std::span<const std::size_t> rows, bool with_z) {
  const auto d = static_cast<Eigen::Index>(data.covariate_count());
  SeverityData s;
  s.x.resize(static_cast<Eigen::Index>(rows.size()), d + (with_z ? 1 : 0));
  s.y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    const auto ri = static_cast<Eigen::Index>(r);
    if (with_z) s.x(ri, 0) = data.z()[i];
    s.x.row(ri).tail(d) = data.x().row(static_cast<Eigen::Index>(i));
    s.y.push_back(data.y()[i]);
  }
  return s;
}

/// Per positive row: y, x, and Φ⁻¹ of F_Z(z) and F_Z(z - 1), fixed once γ is known.
struct CopulaRows {
  SeverityData sev;
  std::vector<double> upper;
  std::vector<double> lower;
};

CopulaRows copula_rows(const Dataset& data, std::span<const std::size_t> rows, const Eigen::VectorXd& gamma) {
  CopulaRows c{severity_rows(data, rows, false), {}, {}};
  for (std::size_t i : rows) {
    const double lambda = std::exp(dot(gamma, data.row(i)));
    const int z = data.z()[i];
    c.upper.push_back(probit(dist::poisson_cdf(z, lambda), dist::poisson_ccdf(z, lambda)));
    c.lower.push_back(probit(dist::poisson_cdf(z - 1, lambda), dist::poisson_ccdf(z - 1, lambda)));
  }
  return c;
}

/// Φ⁻¹(F_Y(y)) with F_Y clamped to [1e-10, 1 - 1e-10]; `clamped` reports whether the clamp bit.
double gamma_score(double y, double mu, double dispersion, bool& clamped) {
  const double shape = 1.0 / dispersion;
  const double t = y / (mu * dispersion);
  double p = boost::math::gamma_p(shape, t);
  double q = p > 0.5 ? boost::math::gamma_q(shape, t) : 1.0 - p;
  clamped = false;
  if (p < kClampLo) {
    p = kClampLo;
    q = 1.0 - kClampLo;
    clamped = true;
  } else if (q < 1.0 - kClampHi) {
    q = 1.0 - kClampHi;
    p = kClampHi;
    clamped = true;
  }
  return probit(p, q);
}

struct CopulaEval {
  double loglik = 0.0;
  std::size_t clamped = 0;
};

CopulaEval copula_eval(const CopulaRows& rows, const Eigen::VectorXd& beta, double dispersion, double eta,
                       bool with_marginal) {
  const Eigen::VectorXd log_mu = rows.sev.x * beta;
  const double s = std::sqrt(1.0 - eta * eta);
  CopulaEval out;
  for (std::size_t r = 0; r < rows.sev.y.size(); ++r) {
    const double mu = std::exp(log_mu[static_cast<Eigen::Index>(r)]);
    bool clamped = false;
    const double a = gamma_score(rows.sev.y[r], mu, dispersion, clamped);
    out.clamped += clamped ? 1 : 0;
    const double pz = dist::normal_interval((rows.lower[r] - eta * a) / s, (rows.upper[r] - eta * a) / s);
    out.loglik += std::log(pz);
    if (with_marginal) out.loglik += dist::gamma_log_pdf(rows.sev.y[r], mu, dispersion);
  }
  return out;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(what) + " must be positive and finite");
}

}  // namespace

double PoissonGammaModel::lambda(std::span<const double> x) const { return std::exp(dot(gamma_coefs, x)); }

double PoissonGammaModel::mu(std::span<const double> x, int z) const {
  const auto d = static_cast<Eigen::Index>(x.size());
  if (severity_coefs.size() != d + 1) throw InputError("covariate row length differs from model");
  return std::exp(severity_coefs[0] * z + dot(severity_coefs.tail(d), x));
}

double GaussianCopulaModel::lambda(std::span<const double> x) const { return std::exp(dot(marg_z_coefs, x)); }
double GaussianCopulaModel::mu(std::span<const double> x) const { return std::exp(dot(marg_y_coefs, x)); }

PoissonGammaModel fit_poisson_gamma(const Dataset& data, const PoissonGammaOptions& options) {
  const auto rows = positive_rows(data);
  PoissonGammaModel m;
  m.gamma_coefs = poisson_part(data);
  const auto sev = severity_rows(data, rows, options.severity_on_z);
  const auto fit = fit_log_link_glm(LogLinkFamily::Gamma, sev.x, sev.y);
  m.dispersion = pearson_dispersion(sev.x, sev.y, fit.coef);
  if (options.severity_on_z) {
    m.severity_coefs = fit.coef;
  } else {
    m.severity_coefs.resize(fit.coef.size() + 1);
    m.severity_coefs << 0.0, fit.coef;
  }
  require_positive(m.dispersion, "Gamma dispersion");
  return m;
}

std::string_view to_string(CopulaEstimator e) { return e == CopulaEstimator::Ifm ? "ifm" : "selection_adjusted"; }

CopulaEstimator copula_estimator_from_string(std::string_view name) {
  if (name == "ifm") return CopulaEstimator::Ifm;
  if (name == "selection_adjusted") return CopulaEstimator::SelectionAdjusted;
  throw InputError("unknown copula estimator '" + std::string(name) + "'");
}

GaussianCopulaModel fit_gaussian_copula(const Dataset& data, const CopulaFitOptions& options) {
  const auto rows = positive_rows(data);
  GaussianCopulaModel m;
  m.marg_z_coefs = poisson_part(data);
  const auto cr = copula_rows(data, rows, m.marg_z_coefs);
  const auto fit = fit_log_link_glm(LogLinkFamily::Gamma, cr.sev.x, cr.sev.y);
  m.marg_y_coefs = fit.coef;
  m.dispersion = pearson_dispersion(cr.sev.x, cr.sev.y, fit.coef);
  require_positive(m.dispersion, "Gamma dispersion");
  m.eta = golden_section_max(
      [&](double eta) { return copula_eval(cr, m.marg_y_coefs, m.dispersion, eta, false).loglik; }, -kEtaBound,
      kEtaBound);

  if (options.estimator == CopulaEstimator::SelectionAdjusted) {
    const auto p = m.marg_y_coefs.size();
    Eigen::VectorXd theta(p + 2);
    theta << m.marg_y_coefs, std::log(m.dispersion), std::atanh(m.eta);
    const auto negll = [&](const Eigen::VectorXd& t) {
      const double eta = std::tanh(t[p + 1]);
      if (std::abs(eta) > kEtaBound) return std::numeric_limits<double>::infinity();
      return -copula_eval(cr, t.head(p), std::exp(t[p]), eta, true).loglik;
    };
    NelderMeadConfig nm;
    nm.f_tol = 1e-10;
    nm.x_tol = 1e-5;
    nm.max_evals = 400 * static_cast<int>(theta.size());
    auto best = nelder_mead_min(negll, theta, nm);
    // Restart from the first optimum.
    best = nelder_mead_min(negll, best.x, nm);
    m.marg_y_coefs = best.x.head(p);
    m.dispersion = std::exp(best.x[p]);
    m.eta = std::tanh(best.x[p + 1]);
  }
  m.clamped_rows = copula_eval(cr, m.marg_y_coefs, m.dispersion, m.eta, false).clamped;
  return m;
}

double copula_loglik(const GaussianCopulaModel& model, const Dataset& data) {
  const auto rows = positive_rows(data);
  const auto cr = copula_rows(data, rows, model.marg_z_coefs);
  return copula_eval(cr, model.marg_y_coefs, model.dispersion, model.eta, true).loglik;
}

std::size_t copula_clamped_rows(const GaussianCopulaModel& model, const Dataset& data) {
  const auto rows = positive_rows(data);
  const auto cr = copula_rows(data, rows, model.marg_z_coefs);
  return copula_eval(cr, model.marg_y_coefs, model.dispersion, model.eta, false).clamped;
}

double copula_cdf(double u, double v, double eta) {
  if (!(std::abs(eta) < 1.0)) throw InputError("copula correlation must lie in (-1, 1)");
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) throw InputError("copula arguments must lie in [0, 1]");
  if (u == 0.0 || v == 0.0) return 0.0;
  const double a_max = dist::normal_quantile(u);
  const double b = dist::normal_quantile(v);
  const double s = std::sqrt(1.0 - eta * eta);
  const auto integrand = [&](double a) {
    const double inner = std::isinf(b) ? 1.0 : dist::normal_cdf((b - eta * a) / s);
    return std::exp(dist::normal_log_pdf(a)) * inner;
  };
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(integrand, -std::numeric_limits<double>::infinity(), a_max, 15, 1e-13);
}

BaselineDraws simulate(const BaselineModel& model, std::span<const double> x, std::size_t n, std::uint64_t seed,
                       std::size_t workers) {
  BaselineDraws out;
  out.latent_y.resize(n);
  out.y.resize(n);
  out.z.resize(n);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  const std::vector<double> xv(x.begin(), x.end());

  const auto draw_block = [&](std::size_t b) {
    Rng rng(seed, substream(kSimDomain, b));
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    if (const auto* pg = std::get_if<PoissonGammaModel>(&model)) {
      const double lambda = pg->lambda(xv);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        const int z = dist::sample_poisson(rng, lambda);
        const double y = dist::sample_gamma(rng, pg->mu(xv, z), pg->dispersion);
        out.z[i] = z;
        out.latent_y[i] = y;
        out.y[i] = z > 0 ? y : 0.0;
      }
    } else {
      const auto& cm = std::get<GaussianCopulaModel>(model);
      const double lambda = cm.lambda(xv);
      const double mu = cm.mu(xv);
      const double s = std::sqrt(1.0 - cm.eta * cm.eta);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        const double y = dist::sample_gamma(rng, mu, cm.dispersion);
        bool clamped = false;
        const double n1 = gamma_score(y, mu, cm.dispersion, clamped);
        const double n2 = cm.eta * n1 + s * dist::sample_normal(rng);
        const int z = dist::poisson_quantile(dist::normal_cdf(n2), lambda);
        out.z[i] = z;
        out.latent_y[i] = y;
        out.y[i] = z > 0 ? y : 0.0;
      }
    }
  };
  parallel_for(blocks, workers, draw_block);
  return out;
}

ParametricQuantiles parametric_quantiles(const BaselineModel& model, std::span<const double> x, double tau, double k,
                                         std::size_t n_sim, std::uint64_t seed, std::size_t workers) {
  if (n_sim < 10000) throw InputError("parametric quantiles need at least 10^4 draws");
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("tau must lie in (0, 1)");
  const auto draws = simulate(model, x, n_sim, seed, workers);
  std::vector<double> c(n_sim);
  for (std::size_t i = 0; i < n_sim; ++i) c[i] = draws.y[i] * draws.z[i] + k * draws.z[i];
  return {mc_quantile(draws.y, tau), mc_quantile(c, tau)};
}

std::vector<double> poisson_fitted_counts(const Eigen::VectorXd& gamma_coefs, const Eigen::MatrixXd& x,
                                          std::span<const int> z_values) {
  const Eigen::VectorXd eta = x * gamma_coefs;
  std::vector<double> counts(z_values.size(), 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double lambda = std::exp(eta[i]);
    for (std::size_t j = 0; j < z_values.size(); ++j) counts[j] += std::exp(dist::poisson_log_pmf(z_values[j], lambda));
  }
  return counts;
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json envelope(std::string_view kind) {
  return {{"format", "jointdr.model"}, {"version", kModelFormatVersion}, {"kind", kind}};
}

}  // namespace

json to_json(const PoissonGammaModel& m) {
  auto j = envelope("poisson_gamma");
  j["gamma_coefs"] = vec_json(m.gamma_coefs);
  j["severity_coefs"] = vec_json(m.severity_coefs);
  j["dispersion"] = m.dispersion;
  return j;
}

json to_json(const GaussianCopulaModel& m) {
  auto j = envelope("gaussian_copula");
  j["marg_y_coefs"] = vec_json(m.marg_y_coefs);
  j["dispersion"] = m.dispersion;
  j["marg_z_coefs"] = vec_json(m.marg_z_coefs);
  j["eta"] = m.eta;
  j["clamped_rows"] = m.clamped_rows;
  return j;
}

PoissonGammaModel poisson_gamma_from_json(const json& j) {
  check_envelope(j, "poisson_gamma");
  PoissonGammaModel m{vec_from(j.at("gamma_coefs")), vec_from(j.at("severity_coefs")),
                      j.at("dispersion").get<double>()};
  require_positive(m.dispersion, "Gamma dispersion");
  if (m.severity_coefs.size() != m.gamma_coefs.size() + 1) throw InputError("poisson_gamma coefficient sizes differ");
  return m;
}

GaussianCopulaModel gaussian_copula_from_json(const json& j) {
  check_envelope(j, "gaussian_copula");
  GaussianCopulaModel m;
  m.marg_y_coefs = vec_from(j.at("marg_y_coefs"));
  m.dispersion = j.at("dispersion").get<double>();
  m.marg_z_coefs = vec_from(j.at("marg_z_coefs"));
  m.eta = j.at("eta").get<double>();
  m.clamped_rows = j.value("clamped_rows", std::size_t{0});
  require_positive(m.dispersion, "Gamma dispersion");
  if (!(std::abs(m.eta) < 1.0)) throw InputError("copula correlation must lie in (-1, 1)");
  if (m.marg_y_coefs.size() != m.marg_z_coefs.size()) throw InputError("gaussian_copula coefficient sizes differ");
  return m;
}

}  // namespace jointdr
