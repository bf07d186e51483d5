#include "jointdr/cli/compare.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "jointdr/cli/commands.hpp"
#include "jointdr/core/error.hpp"
#include "jointdr/core/format.hpp"
#include "jointdr/core/grid.hpp"
#include "jointdr/core/parallel.hpp"
#include "jointdr/dr/dr_model.hpp"
#include "jointdr/joint/joint_model.hpp"

namespace jointdr {

using nlohmann::json;

namespace {

constexpr std::uint64_t kParametricDomain = 0x9a7a3e7c;
constexpr std::uint64_t kTruthSeedDomain = 0x7e57;

std::vector<double> x_point(double x1) { return {1.0, x1, 0.5, 0.5}; }

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Dr: return "dr";
    case Estimator::PoissonGamma: return "poisson_gamma";
    case Estimator::GaussianCopula: return "gaussian_copula";
    case Estimator::Truth: return "truth";
  }
  return "";
}

Estimator estimator_from_string(std::string_view name) {
  for (auto e : {Estimator::Dr, Estimator::PoissonGamma, Estimator::GaussianCopula, Estimator::Truth}) {
    if (to_string(e) == name) return e;
  }
  throw InputError("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(Quantity q) { return q == Quantity::QY ? "Q_Y" : "Q_C"; }

json CompareConfig::to_json() const {
  std::vector<std::string> est;
  for (auto e : estimators) est.emplace_back(jointdr::to_string(e));
  return {{"dgp", jointdr::to_json(dgp)},
          {"reps", reps},
          {"estimators", est},
          {"taus", taus},
          {"x1_values", x1_values},
          {"k", k},
          {"grid_quantiles", grid_quantiles},
          {"dr_pairwise", dr_pairwise},
          {"copula_estimator", jointdr::to_string(copula_estimator)},
          {"truth_draws", truth_draws},
          {"parametric_draws", parametric_draws},
          {"seed", seed}};
}

const CompareCell& CompareResult::cell(Estimator e, double x1, double tau, Quantity q) const {
  for (const auto& c : cells) {
    if (c.estimator == e && c.x1 == x1 && c.tau == tau && c.quantity == q) return c;
  }
  throw InputError("no comparison cell for the requested estimator, x1, tau and quantity");
}

CompareResult run_compare(const CompareConfig& config) {
  config.dgp.validate();
  if (config.reps < 1 || config.estimators.empty() || config.taus.empty() || config.x1_values.empty()) {
    throw InputError("comparison needs reps, estimators, taus and x1 values");
  }
  const std::size_t nx = config.x1_values.size(), nt = config.taus.size(), ne = config.estimators.size();
  // slot layout: ((e * nx + xi) * nt + ti) * 2 + quantity
  const std::size_t slots = ne * nx * nt * 2;
  const auto slot = [&](std::size_t e, std::size_t xi, std::size_t ti, std::size_t q) {
    return ((e * nx + xi) * nt + ti) * 2 + q;
  };

  std::vector<double> truth(nx * nt * 2), truth_se(nx * nt * 2);
  for (std::size_t xi = 0; xi < nx; ++xi) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const auto t = truth_quantiles(config.dgp, x_point(config.x1_values[xi]), config.taus[ti], config.k,
                                     config.truth_draws, substream(config.seed, kTruthSeedDomain), config.workers);
      truth[(xi * nt + ti) * 2] = t.q_y.value;
      truth_se[(xi * nt + ti) * 2] = t.q_y.se;
      truth[(xi * nt + ti) * 2 + 1] = t.q_c.value;
      truth_se[(xi * nt + ti) * 2 + 1] = t.q_c.se;
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> est(config.reps, std::vector<double>(slots, nan));
  parallel_for(config.reps, config.workers, [&](std::size_t r) {
    DgpSpec spec = config.dgp;
    spec.seed = substream(config.seed, r);
    const auto data = generate(spec);
    const std::uint64_t sim_seed = substream(kParametricDomain ^ config.seed, r);

    for (std::size_t e = 0; e < ne; ++e) {
      try {
        switch (config.estimators[e]) {
          case Estimator::Dr: {
            RunConfig rc;
            rc.pairwise_interactions = config.dr_pairwise;
            const auto design = design_for(rc, data);
            const auto grid = default_y_grid(data, design, uniform_probs(config.grid_quantiles));
            const JointModel jm(fit_dr(data, grid, design), config.k);
            for (std::size_t xi = 0; xi < nx; ++xi) {
              const auto table = jm.at(x_point(config.x1_values[xi]));
              for (std::size_t ti = 0; ti < nt; ++ti) {
                est[r][slot(e, xi, ti, 0)] = table.marginal_y_quantile(config.taus[ti]).value;
                est[r][slot(e, xi, ti, 1)] = table.var(config.taus[ti], config.k).value;
              }
            }
            break;
          }
          case Estimator::PoissonGamma:
          case Estimator::GaussianCopula: {
            const BaselineModel model = config.estimators[e] == Estimator::PoissonGamma
                                            ? BaselineModel(fit_poisson_gamma(data))
                                            : BaselineModel(fit_gaussian_copula(data, {config.copula_estimator}));
            for (std::size_t xi = 0; xi < nx; ++xi) {
              const auto draws = simulate(model, x_point(config.x1_values[xi]), config.parametric_draws,
                                          substream(sim_seed, xi));
              std::vector<double> c(draws.y.size());
              for (std::size_t i = 0; i < c.size(); ++i) c[i] = draws.y[i] * draws.z[i] + config.k * draws.z[i];
              for (std::size_t ti = 0; ti < nt; ++ti) {
                est[r][slot(e, xi, ti, 0)] = empirical_quantile(draws.y, config.taus[ti]);
                est[r][slot(e, xi, ti, 1)] = empirical_quantile(c, config.taus[ti]);
              }
            }
            break;
          }
          case Estimator::Truth: {
            for (std::size_t xi = 0; xi < nx; ++xi) {
              for (std::size_t ti = 0; ti < nt; ++ti) {
                const auto t = truth_quantiles(config.dgp, x_point(config.x1_values[xi]), config.taus[ti], config.k,
                                               config.truth_draws, substream(sim_seed, xi * nt + ti));
                est[r][slot(e, xi, ti, 0)] = t.q_y.value;
                est[r][slot(e, xi, ti, 1)] = t.q_c.value;
              }
            }
            break;
          }
        }
      } catch (const std::exception&) {
        // a failed fit leaves its slots NaN; they are counted as failures
      }
    }
  });

  CompareResult out;
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t xi = 0; xi < nx; ++xi) {
      for (std::size_t ti = 0; ti < nt; ++ti) {
        for (std::size_t q = 0; q < 2; ++q) {
          CompareCell c;
          c.estimator = config.estimators[e];
          c.x1 = config.x1_values[xi];
          c.tau = config.taus[ti];
          c.quantity = q == 0 ? Quantity::QY : Quantity::QC;
          c.truth = truth[(xi * nt + ti) * 2 + q];
          c.truth_se = truth_se[(xi * nt + ti) * 2 + q];
          double sum = 0.0, sq = 0.0;
          for (std::size_t r = 0; r < config.reps; ++r) {
            const double v = est[r][slot(e, xi, ti, q)];
            if (!std::isfinite(v)) {
              ++c.failures;
              continue;
            }
            c.estimates.push_back(v);
            sum += v - c.truth;
            sq += (v - c.truth) * (v - c.truth);
          }
          c.reps = c.estimates.size();
          c.bias = c.reps ? sum / static_cast<double>(c.reps) : nan;
          c.mse = c.reps ? sq / static_cast<double>(c.reps) : nan;
          out.cells.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

void write_compare_csv(std::ostream& out, const CompareResult& result) {
  out << "estimator,x1,tau,quantity,truth,truth_se,bias,mse,reps,failures\n";
  for (const auto& c : result.cells) {
    out << to_string(c.estimator) << ',' << format_double(c.x1) << ',' << format_double(c.tau) << ','
        << to_string(c.quantity) << ',' << format_double(c.truth) << ',' << format_double(c.truth_se) << ','
        << format_double(c.bias) << ',' << format_double(c.mse) << ',' << c.reps << ',' << c.failures << '\n';
  }
}

CompareResult cmd_compare(const CompareConfig& config, const std::filesystem::path& dir) {
  auto result = run_compare(config);
  std::filesystem::create_directories(dir);
  const auto path = dir / "compare.csv";
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    write_compare_csv(f, result);
  }
  write_manifest(dir, "compare", config.to_json(), config.seed, {path});
  return result;
}

}  // namespace jointdr
