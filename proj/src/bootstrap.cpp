#include "jointdr/bootstrap/bootstrap.hpp"

#include <algorithm>
#include <boost/random/uniform_int_distribution.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "jointdr/core/distributions.hpp"
#include "jointdr/core/error.hpp"
#include "jointdr/core/format.hpp"
#include "jointdr/core/parallel.hpp"
#include "jointdr/core/random.hpp"

namespace jointdr {

namespace {

constexpr std::uint64_t kWeightDomain = 0x77e16b75ull;

}  // namespace

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::EmpiricalMultinomial: return "multinomial";
    case WeightKind::BayesianExponential: return "bayesian";
    case WeightKind::Unit: return "unit";
  }
  return "multinomial";
}

WeightKind weight_kind_from_string(std::string_view name) {
  if (name == "multinomial") return WeightKind::EmpiricalMultinomial;
  if (name == "bayesian") return WeightKind::BayesianExponential;
  if (name == "unit") return WeightKind::Unit;
  throw InputError("unknown weight scheme '" + std::string(name) + "' (expected multinomial, bayesian or unit)");
}

std::vector<double> draw_weights(const WeightScheme& scheme, std::size_t n, std::size_t replicate) {
  if (n == 0) throw InputError("draw_weights: n must be positive");
  std::vector<double> w(n, 0.0);
  Rng rng(scheme.seed, substream(kWeightDomain, replicate));
  switch (scheme.kind) {
    case WeightKind::Unit:
      std::fill(w.begin(), w.end(), 1.0);
      break;
    case WeightKind::EmpiricalMultinomial: {
      boost::random::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) w[pick(rng)] += 1.0;
      break;
    }
    case WeightKind::BayesianExponential: {
      double sum = 0.0;
      for (auto& v : w) {
        v = dist::sample_exponential(rng);
        sum += v;
      }
      const double mean = sum / static_cast<double>(n);
      for (auto& v : w) v /= mean;
      break;
    }
  }
  return w;
}

Eigen::MatrixXd draw_weight_matrix(const WeightScheme& scheme, std::size_t n, std::size_t replicates) {
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(replicates));
  for (std::size_t b = 0; b < replicates; ++b) {
    const auto col = draw_weights(scheme, n, b);
    for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = col[i];
  }
  return w;
}

std::size_t BootstrapResult::flagged_count() const {
  return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; }));
}

std::vector<double> BootstrapResult::component(std::size_t j, bool exclude_flagged) const {
  std::vector<double> out;
  out.reserve(replicates.size());
  for (std::size_t b = 0; b < replicates.size(); ++b) {
    if (exclude_flagged && flags[b] != 0) continue;
    out.push_back(replicates[b].at(j));
  }
  return out;
}

BootstrapResult bootstrap_fit(const Dataset& data, const ThresholdGrid& y_grid, const DesignSpec& design,
                              const BootstrapConfig& config, const Functional& functional) {
  if (config.replicates == 0) throw InputError("bootstrap needs at least one replicate");
  DrFitOptions base_opt = config.fit;
  base_opt.weights = {};
  base_opt.workers = config.workers;
  const JointModel base(fit_dr(data, y_grid, design, base_opt), config.overhead_k);

  BootstrapResult result;
  result.scheme = config.scheme;
  result.point = functional(base);
  const std::size_t m = result.point.size();
  const auto support = base.dr().z_support();
  result.replicates.assign(config.replicates, std::vector<double>(m, std::numeric_limits<double>::quiet_NaN()));
  result.flags.assign(config.replicates, 0);

  parallel_for(config.replicates, config.workers, [&](std::size_t b) {
    const auto w = draw_weights(config.scheme, data.size(), b);
    std::uint8_t flag = 0;
    for (int z : support) {
      double mass = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.z()[i] == z) mass += w[i];
      }
      if (mass == 0.0) flag |= static_cast<std::uint8_t>(ReplicateFlag::LostZLevel);
    }
    DrFitOptions opt = config.fit;
    opt.weights = w;
    opt.z_support = support;
    opt.workers = 1;
    try {
      const JointModel rep(fit_dr(data, y_grid, design, opt), config.overhead_k);
      const auto& p = rep.dr().path();
      auto maxed = [](FitStatus s) { return s == FitStatus::MaxIterations; };
      if (std::any_of(p.y_status.begin(), p.y_status.end(), maxed) ||
          std::any_of(p.z_status.begin(), p.z_status.end(), maxed)) {
        flag |= static_cast<std::uint8_t>(ReplicateFlag::MaxIterations);
      }
      auto values = functional(rep);
      if (values.size() != m) throw InputError("bootstrap functional changed its output length");
      result.replicates[b] = std::move(values);
    } catch (const RankDeficientError&) {
      flag |= static_cast<std::uint8_t>(ReplicateFlag::RankDeficient);
    }
    result.flags[b] = flag;
  });
  return result;
}

Interval percentile_ci(std::span<const double> replicates, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  std::vector<double> v;
  v.reserve(replicates.size());
  for (double x : replicates) {
    if (!std::isnan(x)) v.push_back(x);
  }
  if (v.size() < 20) {
    throw InputError("percentile interval needs at least 20 replicate values, got " + std::to_string(v.size()));
  }
  std::sort(v.begin(), v.end());
  const auto lo = quantile_rank((1.0 - level) / 2.0, v.size());
  const auto hi = quantile_rank((1.0 + level) / 2.0, v.size());
  return {v[lo - 1], v[hi - 1]};
}

void write_ensemble_csv(std::ostream& out, std::span<const EnsembleSummaryRow> rows) {
  out << "functional_id,point,lo,hi,B,flagged_count,seed\n";
  for (const auto& r : rows) {
    out << csv_field(r.functional_id) << ',' << format_double(r.point) << ',' << format_double(r.ci.lo) << ','
        << format_double(r.ci.hi) << ',' << r.replicates << ',' << r.flagged << ',' << r.seed << '\n';
  }
}

}  // namespace jointdr
