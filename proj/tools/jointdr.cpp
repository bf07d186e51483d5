#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jointdr/cli/commands.hpp"
#include "jointdr/cli/compare.hpp"
#include "jointdr/core/error.hpp"
#include "jointdr/core/parallel.hpp"
#include "jointdr/dr/serialize.hpp"

using namespace jointdr;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct RunOptions {
  RunConfig config;
  std::string y_link = "logit", z_link = "logit", z_encoding = "linear", eval_set = "train", scheme = "multinomial";
  double train_fraction = 0.0;
};

void add_data_options(CLI::App* app, RunOptions& o) {
  auto& c = o.config;
  app->add_option("--input", c.input, "CSV input file")->required();
  app->add_option("--y-col", c.columns.y_col, "continuous outcome column");
  app->add_option("--z-col", c.columns.z_col, "count outcome column");
  app->add_option("--covariates", c.columns.covariate_cols, "covariate columns (default: all others)")->delimiter(',');
  app->add_option("--categorical", c.columns.categorical_cols, "covariates to one-hot encode")->delimiter(',');
  app->add_option("--train-fraction", o.train_fraction, "random train share in (0, 1); 0 disables the split");
  app->add_option("--split-seed", c.split_seed, "seed of the train/validation split");
  app->add_option("--split-index", c.split_index_file, "file of 0-based training row indices");
  app->add_option("--eval-set", o.eval_set, "train | validation | all");
  app->add_option("--out", c.output_dir, "output directory");
}

void add_model_options(CLI::App* app, RunOptions& o) {
  auto& c = o.config;
  app->add_option("--y-link", o.y_link, "logit | probit");
  app->add_option("--z-link", o.z_link, "logit | probit");
  app->add_option("--grid-quantiles", c.grid_quantiles, "Y-grid at probabilities 1/m, ..., 1");
  app->add_option("--grid-points", c.grid_points, "explicit Y-grid")->delimiter(',');
  app->add_flag("--pairwise", c.pairwise_interactions, "add pairwise covariate products");
  app->add_option("--z-encoding", o.z_encoding, "linear | dummies");
  app->add_option("--y-sample", c.y_sample, "auto | all | positive_z");
  app->add_option("--k", c.overhead_k, "per-claim overhead in C = YZ + kZ");
}

void add_bootstrap_options(CLI::App* app, RunOptions& o) {
  auto& c = o.config;
  app->add_option("--scheme", o.scheme, "multinomial | bayesian");
  app->add_option("--replicates", c.bootstrap_replicates, "bootstrap replicates B");
  app->add_option("--seed", c.bootstrap_seed, "bootstrap seed");
  app->add_flag("--refit", c.bootstrap_refit, "refit the model in every replicate");
}

RunConfig finish(RunOptions& o, std::size_t workers) {
  auto c = o.config;
  c.y_link = link_kind_from_string(o.y_link);
  c.z_link = link_kind_from_string(o.z_link);
  c.z_encoding = z_encoding_from_string(o.z_encoding);
  c.eval_set = eval_set_from_string(o.eval_set);
  c.bootstrap_scheme = weight_kind_from_string(o.scheme);
  if (o.train_fraction != 0.0) c.train_fraction = o.train_fraction;
  c.workers = workers;
  c.validate();
  return c;
}

int fail(const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution regression for joint frequency-severity outcomes"};
  app.set_config("--config", "", "TOML/INI file with option values; flags take precedence");
  app.require_subcommand(1);
  std::size_t workers = 0;
  app.add_option("--workers", workers, "worker threads (default: JOINTDR_WORKERS or all cores)");

  RunOptions fit_o, gof_o, var_o, cdf_o;
  bool baselines = false;
  auto* fit = app.add_subcommand("fit", "fit the DR model on the training rows");
  add_data_options(fit, fit_o);
  add_model_options(fit, fit_o);
  fit->add_flag("--baselines", baselines, "also fit the Poisson-Gamma and Gaussian-copula models");

  std::string model_path, pg_path, copula_path;
  auto* gof = app.add_subcommand("gof", "observed versus fitted claim-count frequencies");
  add_data_options(gof, gof_o);
  gof->add_option("--model", model_path, "DR model JSON")->required();
  gof->add_option("--poisson-gamma", pg_path, "Poisson-Gamma model JSON");
  gof->add_option("--copula", copula_path, "Gaussian-copula model JSON");

  std::vector<std::string> cohorts{"all"};
  std::vector<double> taus{0.95};
  auto* var = app.add_subcommand("var", "cohort VaR of the total cost with bootstrap intervals");
  add_data_options(var, var_o);
  add_model_options(var, var_o);
  add_bootstrap_options(var, var_o);
  var->add_option("--model", model_path, "DR model JSON")->required();
  var->add_option("--cohort", cohorts, "name=filter, e.g. young=age<30 && urban==1 (repeatable)");
  var->add_option("--tau", taus, "VaR levels")->delimiter(',');

  std::string target = "y_given_positive_z";
  auto* cdf = app.add_subcommand("cdf", "model versus empirical CDF table");
  add_data_options(cdf, cdf_o);
  add_model_options(cdf, cdf_o);
  cdf->add_option("--model", model_path, "DR model JSON")->required();
  cdf->add_option("--target", target, "y_given_positive_z | s_positive | c");

  int design = 1, case_number = 1;
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  std::string reading = "ceil", out_path = "simulated.csv";
  auto* simulate = app.add_subcommand("simulate", "generate a sample from a simulation design");
  simulate->add_option("--design", design, "1: Poisson-Gamma, 2: Gaussian copula, 3: truncated bivariate normal");
  simulate->add_option("--case", case_number, "gamma case 1 or 2");
  simulate->add_option("--n", n, "sample size");
  simulate->add_option("--seed", seed, "seed");
  simulate->add_option("--reading", reading, "ceil | floor count reading for design 3");
  simulate->add_option("--out", out_path, "output CSV");

  CompareConfig cc;
  std::vector<std::string> estimators{"dr", "poisson_gamma", "gaussian_copula"};
  std::string copula_estimator = "selection_adjusted", compare_out = "out";
  auto* compare = app.add_subcommand("compare", "Monte Carlo bias/MSE comparison against the true quantiles");
  compare->add_option("--design", design, "simulation design 1, 2 or 3");
  compare->add_option("--case", case_number, "gamma case 1 or 2");
  compare->add_option("--n", n, "sample size per replication");
  compare->add_option("--reading", reading, "ceil | floor count reading for design 3");
  compare->add_option("--reps", cc.reps, "Monte Carlo replications");
  compare->add_option("--estimators", estimators, "dr, poisson_gamma, gaussian_copula, truth")->delimiter(',');
  compare->add_option("--tau", cc.taus, "quantile levels")->delimiter(',');
  compare->add_option("--x1", cc.x1_values, "x1 values of x = (1, x1, 0.5, 0.5)")->delimiter(',');
  compare->add_option("--k", cc.k, "per-claim overhead in C");
  compare->add_option("--grid-quantiles", cc.grid_quantiles, "DR Y-grid size");
  compare->add_option("--copula-estimator", copula_estimator, "selection_adjusted | ifm");
  compare->add_option("--truth-draws", cc.truth_draws, "Monte Carlo draws for the true quantiles");
  compare->add_option("--parametric-draws", cc.parametric_draws, "draws for parametric quantiles");
  compare->add_option("--seed", cc.seed, "seed");
  compare->add_option("--out", compare_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    return fail("usage", e.what(), 64);
  }

  try {
    if (workers == 0) workers = default_workers();
    if (fit->parsed()) {
      const auto out = cmd_fit(finish(fit_o, workers), baselines);
      std::cout << out.report.dump(2) << '\n';
    } else if (gof->parsed()) {
      const auto config = finish(gof_o, workers);
      const auto model = dr_model_from_json(read_json(model_path));
      std::optional<PoissonGammaModel> pg;
      std::optional<GaussianCopulaModel> cm;
      if (!pg_path.empty()) pg = poisson_gamma_from_json(read_json(pg_path));
      if (!copula_path.empty()) cm = gaussian_copula_from_json(read_json(copula_path));
      const auto out = cmd_gof(config, model, pg ? &*pg : nullptr, cm ? &*cm : nullptr);
      for (const auto& [name, chi2] : out.chi_square) std::cout << name << " chi_square " << chi2 << '\n';
    } else if (var->parsed()) {
      const auto config = finish(var_o, workers);
      const auto model = dr_model_from_json(read_json(model_path));
      std::vector<Cohort> parsed;
      for (const auto& c : cohorts) parsed.push_back(parse_cohort(c));
      for (const auto& r : cmd_var(config, model, parsed, taus)) {
        std::cout << r.cohort << " tau=" << r.tau << " VaR=" << r.point << " [" << r.lo << ", " << r.hi << "]\n";
      }
    } else if (cdf->parsed()) {
      const auto config = finish(cdf_o, workers);
      const auto model = dr_model_from_json(read_json(model_path));
      const auto rows = cmd_cdf(config, model, cdf_target_from_string(target));
      std::cout << rows.size() << " rows written to " << (config.output_dir / ("cdf_" + target + ".csv")).string()
                << '\n';
    } else if (simulate->parsed()) {
      auto spec = DgpSpec::preset(design, case_number, n, seed);
      spec.reading = count_reading_from_string(reading);
      cmd_simulate(spec, out_path, workers);
      std::cout << n << " rows written to " << out_path << '\n';
    } else if (compare->parsed()) {
      cc.dgp = DgpSpec::preset(design, case_number, n, 0);
      cc.dgp.reading = count_reading_from_string(reading);
      cc.estimators.clear();
      for (const auto& e : estimators) cc.estimators.push_back(estimator_from_string(e));
      cc.copula_estimator = copula_estimator_from_string(copula_estimator);
      cc.workers = workers;
      const auto result = cmd_compare(cc, compare_out);
      write_compare_csv(std::cout, result);
    }
  } catch (const InputError& e) {
    return fail("input", e.what(), 2);
  } catch (const RankDeficientError& e) {
    return fail("rank_deficient", e.what(), 3);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
