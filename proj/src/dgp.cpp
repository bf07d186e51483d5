#include "jointdr/dgp/dgp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "jointdr/core/distributions.hpp"
#include "jointdr/core/error.hpp"
#include "jointdr/core/parallel.hpp"

namespace jointdr {

using nlohmann::json;

namespace {

constexpr std::uint64_t kRowDomain = 0xd690a3e1;
constexpr std::uint64_t kTruthDomain = 0x7a07b11c;
constexpr std::size_t kBlock = 10000;

double dot4(const Eigen::Vector4d& c, std::span<const double> x) {
  return c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3];
}

Eigen::Vector4d vec4(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw InputError("DGP coefficient vectors need 4 entries");
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

std::string_view to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::PoissonGamma: return "poisson_gamma";
    case DgpKind::GaussianCopula: return "gaussian_copula";
    case DgpKind::TruncatedBivariateNormal: return "truncated_bivariate_normal";
  }
  return "";
}

DgpKind dgp_kind_from_string(std::string_view name) {
  for (auto k : {DgpKind::PoissonGamma, DgpKind::GaussianCopula, DgpKind::TruncatedBivariateNormal}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unknown DGP kind '" + std::string(name) + "'");
}

std::string_view to_string(CountReading r) { return r == CountReading::Ceil ? "ceil" : "floor"; }

CountReading count_reading_from_string(std::string_view name) {
  if (name == "ceil") return CountReading::Ceil;
  if (name == "floor") return CountReading::Floor;
  throw InputError("unknown count reading '" + std::string(name) + "'");
}

DgpSpec DgpSpec::preset(int design, int case_number, std::size_t n, std::uint64_t seed) {
  if (case_number != 1 && case_number != 2) throw InputError("DGP case must be 1 or 2");
  DgpSpec s;
  s.n = n;
  s.seed = seed;
  const bool c1 = case_number == 1;
  switch (design) {
    case 1:
      s.kind = DgpKind::PoissonGamma;
      s.gamma = c1 ? Eigen::Vector4d(0.5, -0.5, -0.5, -0.5) : Eigen::Vector4d(-1.0, 0.5, 0.5, 0.5);
      break;
    case 2:
      s.kind = DgpKind::GaussianCopula;
      s.gamma = c1 ? Eigen::Vector4d(-1.0, 1.0, 1.0, 1.0) : Eigen::Vector4d(-2.0, 0.6, 0.6, 0.6);
      break;
    case 3:
      s.kind = DgpKind::TruncatedBivariateNormal;
      s.gamma = c1 ? Eigen::Vector4d(1.5, 0.2, 0.2, 0.2) : Eigen::Vector4d(0.1, 0.2, 0.2, 0.2);
      break;
    default: throw InputError("DGP design must be 1, 2 or 3");
  }
  return s;
}

void DgpSpec::validate() const {
  if (n < 1) throw InputError("DGP sample size must be at least 1");
  if (!beta.allFinite() || !gamma.allFinite()) throw InputError("DGP coefficients must be finite");
  switch (kind) {
    case DgpKind::PoissonGamma:
      if (!(delta > 0.0) || !std::isfinite(alpha)) throw InputError("Poisson-Gamma DGP needs delta > 0, finite alpha");
      break;
    case DgpKind::GaussianCopula:
      if (!(delta > 0.0) || !(std::abs(eta) < 1.0)) throw InputError("copula DGP needs delta > 0, |eta| < 1");
      break;
    case DgpKind::TruncatedBivariateNormal:
      if (!(var_s2 > 0.0) || !(cov * cov < var_s2)) throw InputError("bivariate normal DGP covariance not positive definite");
      break;
  }
}

std::pair<double, double> draw_latent_normal(const DgpSpec& spec, std::span<const double> x, Rng& rng) {
  const double e1 = dist::sample_normal(rng);
  const double e2 = dist::sample_normal(rng);
  const double sd2 = std::sqrt(spec.var_s2);
  const double rho = spec.cov / sd2;
  return {dot4(spec.beta, x) + e1, dot4(spec.gamma, x) + sd2 * (rho * e1 + std::sqrt(1.0 - rho * rho) * e2)};
}

std::pair<double, int> draw_outcome(const DgpSpec& spec, std::span<const double> x, Rng& rng) {
  if (x.size() != 4) throw InputError("DGP covariate rows have 4 entries");
  switch (spec.kind) {
    case DgpKind::PoissonGamma: {
      const int z = dist::sample_poisson(rng, std::exp(dot4(spec.gamma, x)));
      if (z == 0) return {0.0, 0};
      return {dist::sample_gamma(rng, std::exp(spec.alpha * z + dot4(spec.beta, x)), spec.delta), z};
    }
    case DgpKind::GaussianCopula: {
      const double n1 = dist::sample_normal(rng);
      const double n2 = spec.eta * n1 + std::sqrt(1.0 - spec.eta * spec.eta) * dist::sample_normal(rng);
      const int z = dist::poisson_quantile(dist::normal_cdf(n2), std::exp(dot4(spec.gamma, x)));
      if (z == 0) return {0.0, 0};
      return {dist::gamma_quantile(dist::normal_cdf(n1), std::exp(dot4(spec.beta, x)), spec.delta), z};
    }
    case DgpKind::TruncatedBivariateNormal: {
      const auto [s1, s2] = draw_latent_normal(spec, x, rng);
      const double a = std::abs(s2);
      const double zc = spec.reading == CountReading::Ceil ? std::ceil(a) : std::floor(a);
      return {std::abs(s1), static_cast<int>(zc)};
    }
  }
  return {0.0, 0};
}

Dataset generate(const DgpSpec& spec, std::size_t workers) {
  spec.validate();
  const auto n = spec.n;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
  std::vector<double> y(n);
  std::vector<int> z(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Rng rng(spec.seed, substream(kRowDomain, i));
    const auto r = static_cast<Eigen::Index>(i);
    std::array<double, 4> xi{1.0, 0.0, 0.0, 0.0};
    for (int j = 1; j < 4; ++j) xi[static_cast<std::size_t>(j)] = uniform_open01(rng);
    for (int j = 0; j < 4; ++j) x(r, j) = xi[static_cast<std::size_t>(j)];
    std::tie(y[i], z[i]) = draw_outcome(spec, xi, rng);
  });
  return Dataset(std::move(x), std::move(y), std::move(z), {"intercept", "x1", "x2", "x3"});
}

TruthQuantiles truth_quantiles(const DgpSpec& spec, std::span<const double> x, double tau, double k,
                               std::size_t n_sim, std::uint64_t seed, std::size_t workers) {
  spec.validate();
  if (n_sim < 1000000) throw InputError("truth quantiles need at least 10^6 draws");
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("tau must lie in (0, 1)");
  if (x.size() != 4 || x[0] != 1.0) throw InputError("DGP covariate rows are (1, x1, x2, x3)");
  std::vector<double> y(n_sim), c(n_sim);
  const std::size_t blocks = (n_sim + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng(seed, substream(kTruthDomain, b));
    for (std::size_t i = b * kBlock; i < std::min(n_sim, (b + 1) * kBlock); ++i) {
      const auto [yi, zi] = draw_outcome(spec, x, rng);
      y[i] = yi;
      c[i] = yi * zi + k * zi;
    }
  });
  return {mc_quantile(y, tau), mc_quantile(c, tau)};
}

McQuantile truth_cohort_cost_quantile(const DgpSpec& spec, const Eigen::MatrixXd& xs, double tau, double k,
                                      std::size_t n_sim, std::uint64_t seed, std::size_t workers) {
  spec.validate();
  if (n_sim < 1000000) throw InputError("truth quantiles need at least 10^6 draws");
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("tau must lie in (0, 1)");
  if (xs.rows() == 0 || xs.cols() != 4) throw InputError("cohort rows must be (1, x1, x2, x3)");
  const auto m = static_cast<std::size_t>(xs.rows());
  const Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor> rows = xs;
  std::vector<double> c(n_sim);
  const std::size_t blocks = (n_sim + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng(seed, substream(kTruthDomain, b));
    for (std::size_t i = b * kBlock; i < std::min(n_sim, (b + 1) * kBlock); ++i) {
      const auto r = static_cast<Eigen::Index>(i % m);
      const auto [yi, zi] = draw_outcome(spec, std::span<const double>(rows.row(r).data(), 4), rng);
      c[i] = yi * zi + k * zi;
    }
  });
  return mc_quantile(c, tau);
}

json to_json(const DgpSpec& s) {
  const auto v = [](const Eigen::Vector4d& c) { return std::vector<double>{c[0], c[1], c[2], c[3]}; };
  return {{"kind", to_string(s.kind)}, {"beta", v(s.beta)},     {"gamma", v(s.gamma)},
          {"delta", s.delta},          {"alpha", s.alpha},       {"eta", s.eta},
          {"var_s2", s.var_s2},        {"cov", s.cov},           {"reading", to_string(s.reading)},
          {"n", s.n},                  {"seed", s.seed}};
}

DgpSpec dgp_spec_from_json(const json& j) {
  if (!j.is_object()) throw InputError("DGP spec must be a JSON object");
  DgpSpec s;
  if (j.contains("design")) s = DgpSpec::preset(j.at("design").get<int>(), j.value("case", 1));
  if (j.contains("kind")) s.kind = dgp_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("beta")) s.beta = vec4(j.at("beta"));
  if (j.contains("gamma")) s.gamma = vec4(j.at("gamma"));
  s.delta = j.value("delta", s.delta);
  s.alpha = j.value("alpha", s.alpha);
  s.eta = j.value("eta", s.eta);
  s.var_s2 = j.value("var_s2", s.var_s2);
  s.cov = j.value("cov", s.cov);
  if (j.contains("reading")) s.reading = count_reading_from_string(j.at("reading").get<std::string>());
  s.n = j.value("n", s.n);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

}  // namespace jointdr
