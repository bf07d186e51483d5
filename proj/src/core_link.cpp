#include "jointdr/core/link.hpp"

#include <cmath>
#include <numbers>

#include "jointdr/core/error.hpp"

namespace jointdr {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2π)

double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double log_logistic(double u) {
  if (u >= 0.0) return -std::log1p(std::exp(-u));
  return u - std::log1p(std::exp(u));
}

double normal_log_pdf(double u) { return -0.5 * u * u - kLogSqrt2Pi; }

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

// ln Φ(u). erfc underflows for u below about -37.5; the asymptotic Mills-ratio
// expansion takes over well before that.
double normal_log_cdf(double u) {
  if (u > -30.0) return std::log(normal_cdf(u));
  const double inv2 = 1.0 / (u * u);
  const double series = 1.0 - inv2 + 3.0 * inv2 * inv2 - 15.0 * inv2 * inv2 * inv2;
  return normal_log_pdf(u) - std::log(-u) + std::log(series);
}

}  // namespace

double LinkFunction::cdf(double u) const {
  return kind_ == LinkKind::Logit ? logistic(u) : normal_cdf(u);
}

double LinkFunction::pdf(double u) const {
  if (kind_ == LinkKind::Logit) {
    const double e = std::exp(-std::abs(u));
    return e / ((1.0 + e) * (1.0 + e));
  }
  return std::exp(normal_log_pdf(u));
}

double LinkFunction::ratio(double u) const {
  if (kind_ == LinkKind::Logit) return 1.0;
  if (std::abs(u) <= 8.0) {
    const double p = normal_cdf(u);
    return std::exp(normal_log_pdf(u)) / (p * (1.0 - p));
  }
  return std::exp(normal_log_pdf(u) - normal_log_cdf(u) - normal_log_cdf(-u));
}

double LinkFunction::log_cdf(double u) const {
  return kind_ == LinkKind::Logit ? log_logistic(u) : normal_log_cdf(u);
}

double LinkFunction::log_ccdf(double u) const {
  return kind_ == LinkKind::Logit ? log_logistic(-u) : normal_log_cdf(-u);
}

double LinkFunction::information(double u) const {
  if (kind_ == LinkKind::Logit) return pdf(u);
  return std::exp(2.0 * normal_log_pdf(u) - normal_log_cdf(u) - normal_log_cdf(-u));
}

LinkValue link_eval(LinkFunction link, double u) {
  if (!std::isfinite(u)) throw InputError("link_eval: index must be finite");
  return {link.cdf(u), link.pdf(u), link.ratio(u)};
}

std::string_view to_string(LinkKind kind) {
  return kind == LinkKind::Logit ? "logit" : "probit";
}

LinkKind link_kind_from_string(std::string_view name) {
  if (name == "logit") return LinkKind::Logit;
  if (name == "probit") return LinkKind::Probit;
  throw InputError("unknown link '" + std::string(name) + "' (expected logit or probit)");
}

}  // namespace jointdr
