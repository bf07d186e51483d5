#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jointdr/bootstrap/bootstrap.hpp"
#include "jointdr/cli/commands.hpp"
#include "jointdr/cli/compare.hpp"
#include "jointdr/core/format.hpp"
#include "jointdr/core/grid.hpp"
#include "jointdr/core/parallel.hpp"
#include "jointdr/core/random.hpp"
#include "jointdr/dgp/dgp.hpp"
#include "jointdr/dr/serialize.hpp"
#include "jointdr/glm/binary_mle.hpp"
#include "jointdr/joint/joint_model.hpp"
#include "oracles.hpp"
#include "toy_models.hpp"

using namespace jointdr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fail] ";
    }
    detail << what << "; ";
  }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t workers() { return default_workers(); }

CompareResult run_table(int design, int case_number, const std::vector<Estimator>& estimators) {
  CompareConfig cc;
  cc.dgp = DgpSpec::preset(design, case_number, 2000, 0);
  cc.reps = 100;
  cc.estimators = estimators;
  cc.seed = 20260101;
  cc.workers = workers();
  return run_compare(cc);
}

// 1: DR with logit links and an intercept reproduces observed Z frequencies.
void criterion_1(Outcome& o) {
  for (int design : {1, 2, 3}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = generate(DgpSpec::preset(design, 1, 100000, 7), workers());
    const RunConfig rc;
    const auto d = design_for(rc, data);
    const auto model = fit_dr(data, default_y_grid(data, d, uniform_probs(20)), d);
    const double chi2 = gof_table(data, model, nullptr, nullptr, workers()).chi_square.at("dr");
    o.require(chi2 < 1e-6, "design " + std::to_string(design) + " n=1e5 chi2=" + fmt(chi2, 3) + " (" +
                               fmt(seconds_since(t0), 3) + " s)");
  }
}

// 2: Poisson-Gamma design, case 1.
void criterion_2(Outcome& o) {
  const auto res = run_table(1, 1, {Estimator::Dr, Estimator::PoissonGamma});
  const double x1[] = {0.25, 0.5, 0.75};
  const double pg_bias[] = {-0.002, -0.003, 0.006};
  const double dr_mse[] = {0.06, 0.12, 0.24};
  for (int i = 0; i < 3; ++i) {
    const auto& pg = res.cell(Estimator::PoissonGamma, x1[i], 0.95, Quantity::QY);
    const auto& dr = res.cell(Estimator::Dr, x1[i], 0.95, Quantity::QY);
    o.require(std::abs(pg.bias - pg_bias[i]) <= 0.10 && pg.failures == 0,
              "x1=" + fmt(x1[i]) + " P-G bias " + fmt(pg.bias) + " vs " + fmt(pg_bias[i]));
    const double ratio = dr.mse / dr_mse[i];
    o.require(ratio >= 0.5 && ratio <= 2.0 && dr.failures == 0,
              "x1=" + fmt(x1[i]) + " DR MSE " + fmt(dr.mse) + " vs " + fmt(dr_mse[i]));
  }
}

// 3: truncated bivariate normal design, both cases.
void criterion_3(Outcome& o) {
  for (int c : {1, 2}) {
    const auto res = run_table(3, c, {Estimator::Dr, Estimator::PoissonGamma, Estimator::GaussianCopula});
    for (double x1 : {0.25, 0.5, 0.75}) {
      const auto& dr = res.cell(Estimator::Dr, x1, 0.95, Quantity::QY);
      const auto& pg = res.cell(Estimator::PoissonGamma, x1, 0.95, Quantity::QY);
      const auto& cop = res.cell(Estimator::GaussianCopula, x1, 0.95, Quantity::QY);
      const std::string at = "case " + std::to_string(c) + " x1=" + fmt(x1) + " ";
      o.require(std::abs(dr.bias) < 1.5 && dr.failures == 0, at + "DR bias " + fmt(dr.bias));
      o.require(std::abs(pg.bias) > 4.0, at + "P-G bias " + fmt(pg.bias));
      o.require(std::abs(cop.bias) > 4.0, at + "copula bias " + fmt(cop.bias));
    }
  }
}

// 4: Gaussian copula design, case 1.
void criterion_4(Outcome& o) {
  const auto res = run_table(2, 1, {Estimator::PoissonGamma, Estimator::GaussianCopula});
  for (double x1 : {0.25, 0.5, 0.75}) {
    const auto& pg = res.cell(Estimator::PoissonGamma, x1, 0.95, Quantity::QY);
    const auto& cop = res.cell(Estimator::GaussianCopula, x1, 0.95, Quantity::QY);
    o.require(std::abs(cop.bias) <= 0.25 && cop.failures == 0, "x1=" + fmt(x1) + " copula bias " + fmt(cop.bias));
    o.require(pg.bias < 0.0 && std::abs(pg.bias) > 0.5, "x1=" + fmt(x1) + " P-G bias " + fmt(pg.bias));
  }
}

// 5: binary MLE against derivative-free search; VaR against atom enumeration.
void criterion_5(Outcome& o) {
  Rng rng(5, 0);
  int checked = 0, skipped = 0;
  double worst = 0.0;
  while (checked < 100) {
    const std::size_t n = 20 + rng() % 61;
    const std::size_t p = 1 + rng() % 3;
    const bool probit = rng() % 2 == 1;
    const bool weighted = rng() % 3 == 0;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::vector<std::uint8_t> labels(n);
    std::vector<double> w;
    std::vector<double> truth(p);
    for (auto& b : truth) b = 2.0 * uniform_open01(rng) - 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double u = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        const double v = k == 0 ? 1.0 : 4.0 * uniform_open01(rng) - 2.0;
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
        u += v * truth[k];
      }
      const double prob = probit ? oracle::std_normal_cdf(u) : oracle::logistic(u);
      labels[i] = uniform_open01(rng) < prob ? 1 : 0;
      if (weighted) w.push_back(0.5 + 1.5 * uniform_open01(rng));
    }
    const LinkFunction link(probit ? LinkKind::Probit : LinkKind::Logit);
    const auto fit = fit_binary_mle({x, labels, w, link});
    if (fit.status != FitStatus::Converged) {
      ++skipped;  // separated or degenerate
      continue;
    }
    oracle::SmallProblem sp;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> r(p);
      for (std::size_t k = 0; k < p; ++k) r[k] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      sp.x.push_back(r);
    }
    sp.labels.assign(labels.begin(), labels.end());
    sp.weights = weighted ? w : std::vector<double>(n, 1.0);
    sp.probit = probit;
    const auto f = [&](const std::vector<double>& b) { return oracle::loglik(sp, b); };
    std::vector<std::vector<double>> answers{oracle::simplex_argmax(f, std::vector<double>(p, 0.0))};
    if (p <= 2) answers.push_back(oracle::grid_golden_argmax(f, p));
    for (const auto& b : answers) {
      for (std::size_t k = 0; k < p; ++k) worst = std::max(worst, std::abs(b[k] - fit.coef[static_cast<Eigen::Index>(k)]));
    }
    ++checked;
  }
  o.require(worst <= 1e-4, "MLE: 100 problems, max |coef - oracle| = " + fmt(worst, 3) + " (" +
                               std::to_string(skipped) + " separated draws replaced)");

  Rng mrng(55, 0);
  int exact = 0;
  for (int t = 0; t < 50; ++t) {
    const auto m = toy::random_model(mrng);
    const std::vector<double> x{1.0, uniform_open01(mrng)};
    const double k = 3.0 * uniform_open01(mrng);
    const double tau = 0.02 + 0.96 * uniform_open01(mrng);
    const double got = JointModel(m, k).at(x).var(tau, k).value;
    exact += got == toy::brute_force_var(m, x, k, tau) ? 1 : 0;
  }
  o.require(exact == 50, "VaR: " + std::to_string(exact) + "/50 toy models equal to breakpoint enumeration");
}

// 6: percentile interval coverage for an intercept-only F_Z(0).
void criterion_6(Outcome& o) {
  const double lambda = 1.0, truth = std::exp(-lambda);
  const std::size_t trials = 200, n = 1000, B = 200;
  std::size_t covered = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(6, t);
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
    std::vector<double> y(n);
    std::vector<int> z(n);
    for (std::size_t i = 0; i < n; ++i) {
      double u = uniform_open01(rng), cdf = std::exp(-lambda), pmf = cdf;
      int k = 0;
      while (u > cdf) {
        ++k;
        pmf *= lambda / k;
        cdf += pmf;
      }
      z[i] = k;
      y[i] = k == 0 ? 0.0 : -std::log(uniform_open01(rng));
    }
    const Dataset data(std::move(x), std::move(y), std::move(z), {"intercept"});
    RunConfig rc;
    const auto design = design_for(rc, data);
    const auto grid = default_y_grid(data, design, uniform_probs(4));
    BootstrapConfig bc;
    bc.scheme = {WeightKind::EmpiricalMultinomial, 1000 + t};
    bc.replicates = B;
    bc.workers = workers();
    const auto res = bootstrap_fit(data, grid, design, bc, [](const JointModel& m) {
      return std::vector<double>{m.at(std::vector<double>{1.0}).z_cdf(0)};
    });
    const auto ci = percentile_ci(res.component(0), 0.90);
    covered += ci.lo <= truth && truth <= ci.hi ? 1 : 0;
  }
  const double rate = static_cast<double>(covered) / static_cast<double>(trials);
  o.require(std::abs(rate - 0.90) <= 0.06, "coverage " + fmt(rate, 3) + " over 200 trials (target 0.90 +/- 0.06)");
}

void cdf_invariants(Outcome& o) {
  Rng rng(71, 0);
  bool ok = true;
  std::size_t checks = 0;
  for (int t = 0; t < 50; ++t) {
    const auto m = toy::random_model(rng);
    const double k = 2.0 * uniform_open01(rng);
    const JointModel jm(m, k);
    Eigen::MatrixXd xs(3, 2);
    for (Eigen::Index r = 0; r < 3; ++r) xs.row(r) << 1.0, uniform_open01(rng);
    std::vector<JointTable> tables{jm.at(std::vector<double>{1.0, xs(0, 1)}), jm.average(xs)};
    for (Eigen::Index r = 0; r < 3; ++r) {
      const std::vector<double> x{1.0, xs(r, 1)};
      for (int z : m.z_support()) {
        const auto s = m.y_slice(x, z);
        for (std::size_t j = 0; j < s.values.size(); ++j) {
          ok = ok && s.values[j] >= 0.0 && s.values[j] <= 1.0 && (j == 0 || s.values[j] >= s.values[j - 1]);
          ++checks;
        }
      }
      const auto zc = m.z_cdf(x);
      for (std::size_t j = 0; j < zc.size(); ++j) ok = ok && zc[j] >= 0.0 && (j == 0 || zc[j] >= zc[j - 1]);
      ok = ok && zc.back() == 1.0;
    }
    for (const auto& tb : tables) {
      double py = -1.0, ps = -1.0, pc = -1.0;
      for (int g = 0; g <= 400; ++g) {
        const double v = 0.1 * g;
        const double fy = tb.marginal_y_cdf(v), fs = tb.aggregate_claim_cdf(v), fc = tb.total_cost_cdf(v, k);
        for (double f : {fy, fs, fc}) ok = ok && f >= 0.0 && f <= 1.0 + 1e-12;
        ok = ok && fy >= py - 1e-15 && fs >= ps - 1e-15 && fc >= pc - 1e-15;
        py = fy, ps = fs, pc = fc;
        ++checks;
      }
      for (double tau : {0.05, 0.5, 0.9, 0.99}) {
        const auto q = tb.var(tau, k);
        if (q.saturated) continue;
        const double below = q.value > 0.0 ? tb.total_cost_cdf(std::nextafter(q.value, 0.0), k) : 0.0;
        ok = ok && tb.total_cost_cdf(q.value, k) >= tau - 1e-12 && (q.value == 0.0 || below < tau);
        const auto qy = tb.marginal_y_quantile(tau);
        if (!qy.saturated) ok = ok && tb.marginal_y_cdf(qy.value) >= tau - 1e-12;
        ++checks;
      }
    }
  }
  o.require(ok, "CDF range/monotonicity and quantile-CDF duality on 50 toy models (" + std::to_string(checks) +
                    " checks)");
}

void score_identities(Outcome& o) {
  const auto data = generate(DgpSpec::preset(2, 1, 5000, 72));
  const RunConfig rc;
  const auto design = design_for(rc, data);
  const auto model = fit_dr(data, default_y_grid(data, design, uniform_probs(30)), design);
  const auto& grid = model.y_grid().points();
  const auto& zg = model.path().z_grid;
  double worst = 0.0;
  const std::size_t p = data.covariate_count();
  std::vector<Eigen::VectorXd> sy(grid.size(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 1)));
  std::vector<Eigen::VectorXd> sz(zg.size(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p)));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    const int z = data.z()[i];
    Eigen::VectorXd f(static_cast<Eigen::Index>(p + 1));
    for (std::size_t k = 0; k < p; ++k) f[static_cast<Eigen::Index>(k)] = x[k];
    f[static_cast<Eigen::Index>(p)] = z;
    if (z > 0 || design.y_sample == YSample::All) {
      const auto raw = model.raw_y_values(x, z);
      for (std::size_t j = 0; j < grid.size(); ++j) sy[j] += (raw[j] - (data.y()[i] <= grid[j] ? 1.0 : 0.0)) * f;
    }
    const auto rz = model.raw_z_values(x);
    for (std::size_t j = 0; j < zg.size(); ++j) sz[j] += (rz[j] - (z <= zg[j] ? 1.0 : 0.0)) * f.head(static_cast<Eigen::Index>(p));
  }
  std::size_t used = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (model.path().y_status[j] != FitStatus::Converged) continue;
    worst = std::max(worst, sy[j].cwiseAbs().maxCoeff());
    ++used;
  }
  for (std::size_t j = 0; j < zg.size(); ++j) {
    if (model.path().z_status[j] != FitStatus::Converged) continue;
    worst = std::max(worst, sz[j].cwiseAbs().maxCoeff());
    ++used;
  }
  o.require(worst < 1e-6 && used > 0, "logit score identities on " + std::to_string(used) +
                                          " fitted thresholds, max |score| = " + fmt(worst, 3));
}

void weight_moments(Outcome& o) {
  const std::size_t n = 100000, B = 4;
  for (auto kind : {WeightKind::EmpiricalMultinomial, WeightKind::BayesianExponential}) {
    const auto w = draw_weight_matrix({kind, 73}, n, B);
    double worst_mean = 0.0, worst_var = 0.0;
    bool nonneg = true;
    for (Eigen::Index b = 0; b < w.cols(); ++b) {
      const double mean = w.col(b).mean();
      const double var = (w.col(b).array() - mean).square().sum() / static_cast<double>(n - 1);
      worst_mean = std::max(worst_mean, std::abs(mean - 1.0));
      worst_var = std::max(worst_var, std::abs(var - 1.0));
      nonneg = nonneg && w.col(b).minCoeff() >= 0.0;
    }
    o.require(nonneg && worst_mean < 1e-12 && worst_var < 0.03,
              std::string(to_string(kind)) + " weights: |mean-1| = " + fmt(worst_mean, 2) + ", |var-1| = " +
                  fmt(worst_var, 2));
  }
}

void determinism(Outcome& o) {
  auto spec = DgpSpec::preset(1, 2, 1500, 74);
  std::ostringstream a, b;
  write_csv(a, generate(spec, 1));
  write_csv(b, generate(spec, 3));
  const auto data = generate(spec);
  const RunConfig rc;
  const auto design = design_for(rc, data);
  const auto grid = default_y_grid(data, design, uniform_probs(25));
  DrFitOptions one, three;
  three.workers = 3;
  const auto m1 = to_json(fit_dr(data, grid, design, one)).dump();
  const auto m3 = to_json(fit_dr(data, grid, design, three)).dump();
  BootstrapConfig bc;
  bc.replicates = 20;
  bc.scheme = {WeightKind::BayesianExponential, 9};
  const Functional f = [](const JointModel& m) {
    return std::vector<double>{m.at(std::vector<double>{1.0, 0.5, 0.5, 0.5}).var(0.9, 1.0).value};
  };
  bc.workers = 1;
  const auto r1 = bootstrap_fit(data, grid, design, bc, f).component(0);
  bc.workers = 3;
  const auto r3 = bootstrap_fit(data, grid, design, bc, f).component(0);
  o.require(a.str() == b.str() && m1 == m3 && r1 == r3,
            "fixed seeds give identical samples, fits and bootstrap replicates for 1 and 3 workers");
}

void var_pipeline(Outcome& o) {
  const auto dir = fs::temp_directory_path() / "jointdr_acceptance_var";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto spec = DgpSpec::preset(1, 1, 2000, 75);
  const auto data = generate(spec);
  {
    std::ofstream out(dir / "data.csv", std::ios::binary);
    write_csv(out, data);
  }
  RunConfig rc;
  rc.input = dir / "data.csv";
  rc.grid_quantiles = 100;
  rc.overhead_k = kCompareOverhead;
  rc.bootstrap_refit = true;
  rc.bootstrap_replicates = 200;
  rc.bootstrap_seed = 76;
  rc.output_dir = dir / "out";
  rc.workers = workers();
  const auto fit = cmd_fit(rc);
  const std::vector<Cohort> cohorts{parse_cohort("low=x1<0.5"), parse_cohort("all")};
  const std::vector<double> taus{0.9, 0.95};
  const auto rows = cmd_var(rc, fit.model, cohorts, taus);
  for (const auto& r : rows) {
    const auto& c = r.cohort == "all" ? cohorts[1] : cohorts[0];
    const auto idx = c.filter.select(data);
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(idx.size()), 4);
    for (std::size_t i = 0; i < idx.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = data.x().row(static_cast<Eigen::Index>(idx[i]));
    const auto truth = truth_cohort_cost_quantile(spec, xs, r.tau, rc.overhead_k, 2000000, 77, workers());
    const double tol = 3.0 * std::hypot(r.se, truth.se);
    o.require(std::abs(r.point - truth.value) <= tol, "var " + r.cohort + " tau=" + fmt(r.tau) + " point " +
                                                          fmt(r.point) + " truth " + fmt(truth.value) + " tol " +
                                                          fmt(tol, 3));
  }
}

// 7: invariant suites plus the cohort VaR pipeline against simulated truth.
void criterion_7(Outcome& o) {
  cdf_invariants(o);
  score_identities(o);
  weight_moments(o);
  determinism(o);
  var_pipeline(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> which;
  app.add_option("--criterion", which, "criteria to run (default: all)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7};

  const std::vector<std::function<void(Outcome&)>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                            criterion_5, criterion_6, criterion_7};
  bool all = true;
  for (int c : which) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[static_cast<std::size_t>(c - 1)](o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fmt(seconds_since(t0), 3)
              << " s) " << o.detail.str() << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
