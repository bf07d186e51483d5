#pragma once

#include <string>
#include <string_view>

namespace jointdr {

enum class LinkKind { Logit, Probit };

struct LinkValue {
  double cdf = 0.0;
  double pdf = 0.0;
  double r = 1.0;
};

/// A CDF-shaped map from a linear index to a probability.
///
/// Besides Λ(u) and λ(u) the link exposes R(u) = λ/(Λ(1-Λ)), the factor that
/// turns residuals into score contributions, and log-space versions of Λ and
/// 1-Λ so likelihoods stay finite when the index saturates.
class LinkFunction {
 public:
  constexpr explicit LinkFunction(LinkKind kind = LinkKind::Logit) : kind_(kind) {}

  constexpr LinkKind kind() const { return kind_; }

  double cdf(double u) const;
  double pdf(double u) const;
  double ratio(double u) const;
  /// ln Λ(u)
  double log_cdf(double u) const;
  /// ln(1 - Λ(u))
  double log_ccdf(double u) const;
  /// λ(u)·R(u), the per-observation Fisher information of the index.
  double information(double u) const;

  friend constexpr bool operator==(LinkFunction a, LinkFunction b) { return a.kind_ == b.kind_; }

 private:
  LinkKind kind_;
};

/// Evaluates Λ, λ and R at a finite index; throws InputError otherwise.
LinkValue link_eval(LinkFunction link, double u);

std::string_view to_string(LinkKind kind);
LinkKind link_kind_from_string(std::string_view name);

}  // namespace jointdr
