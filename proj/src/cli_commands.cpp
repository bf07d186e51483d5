#include "jointdr/cli/commands.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/version.hpp>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

#include "jointdr/core/error.hpp"
#include "jointdr/core/format.hpp"
#include "jointdr/core/grid.hpp"
#include "jointdr/core/parallel.hpp"
#include "jointdr/dr/serialize.hpp"
#include "jointdr/joint/joint_model.hpp"

namespace jointdr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kChunk = 256;

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) { open_output(path) << j.dump(2) << '\n'; }

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(bytes));
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

/// Row-ordered sums of f(table_i) over the rows of xs, one sum per output slot;
/// chunk partials are added in chunk order so the result ignores the worker count.
std::vector<double> summed_over_rows(const JointModel& jm, const Eigen::MatrixXd& xs, std::size_t slots,
                                     const std::function<void(const JointTable&, std::vector<double>&)>& f,
                                     std::size_t workers) {
  const auto n = static_cast<std::size_t>(xs.rows());
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(slots, 0.0));
  parallel_for(chunks, workers, [&](std::size_t c) {
    std::vector<double> x(static_cast<std::size_t>(xs.cols()));
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = xs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      f(jm.at(x), partial[c]);
    }
  });
  std::vector<double> total(slots, 0.0);
  for (const auto& p : partial) {
    for (std::size_t s = 0; s < slots; ++s) total[s] += p[s];
  }
  return total;
}

ThresholdGrid y_grid_for(const RunConfig& config, const Dataset& train, const DesignSpec& design) {
  if (!config.grid_points.empty()) return ThresholdGrid::from_points(config.grid_points);
  return default_y_grid(train, design, uniform_probs(config.grid_quantiles));
}

DrFitOptions fit_options(const RunConfig& config) {
  DrFitOptions o;
  o.links = {LinkFunction(config.y_link), LinkFunction(config.z_link)};
  o.workers = config.workers;
  return o;
}

}  // namespace

std::string_view to_string(EvalSet s) {
  switch (s) {
    case EvalSet::Train: return "train";
    case EvalSet::Validation: return "validation";
    case EvalSet::All: return "all";
  }
  return "";
}

EvalSet eval_set_from_string(std::string_view name) {
  if (name == "train") return EvalSet::Train;
  if (name == "validation") return EvalSet::Validation;
  if (name == "all") return EvalSet::All;
  throw InputError("unknown evaluation set '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (train_fraction && !(*train_fraction > 0.0 && *train_fraction < 1.0)) {
    throw InputError("train_fraction must lie in (0, 1)");
  }
  if (grid_points.empty() && grid_quantiles < 1) throw InputError("grid needs at least one quantile");
  if (y_sample != "auto" && y_sample != "all" && y_sample != "positive_z") {
    throw InputError("y_sample must be auto, all or positive_z");
  }
  if (!(overhead_k >= 0.0) || !std::isfinite(overhead_k)) throw InputError("overhead k must be non-negative");
  if (bootstrap_replicates < 1) throw InputError("bootstrap needs at least one replicate");
  if (workers < 1) throw InputError("workers must be at least 1");
}

json RunConfig::to_json() const {
  json j;
  j["input"] = input.string();
  j["columns"] = {{"y", columns.y_col},
                  {"z", columns.z_col},
                  {"covariates", columns.covariate_cols},
                  {"categorical", columns.categorical_cols}};
  j["links"] = {{"y", to_string(y_link)}, {"z", to_string(z_link)}};
  j["grid"] = {{"quantiles", grid_quantiles}, {"points", grid_points}};
  j["design"] = {{"pairwise_interactions", pairwise_interactions},
                 {"z_encoding", to_string(z_encoding)},
                 {"y_sample", y_sample}};
  j["overhead_k"] = overhead_k;
  j["bootstrap"] = {{"scheme", to_string(bootstrap_scheme)},
                    {"replicates", bootstrap_replicates},
                    {"seed", bootstrap_seed},
                    {"refit", bootstrap_refit}};
  j["split"] = {{"train_fraction", train_fraction ? json(*train_fraction) : json(nullptr)},
                {"seed", split_seed},
                {"index_file", split_index_file.string()}};
  j["eval_set"] = to_string(eval_set);
  j["output_dir"] = output_dir.string();
  return j;
}

Dataset PreparedData::eval(EvalSet s) const {
  switch (s) {
    case EvalSet::Train: return train();
    case EvalSet::Validation: return validation();
    case EvalSet::All: return data;
  }
  return data;
}

PreparedData prepare_data(const RunConfig& config) {
  config.validate();
  Dataset data = ingest(config.input, config.columns);
  Split split;
  if (!config.split_index_file.empty()) {
    split = split_from_index_file(config.split_index_file, data.size());
  } else if (config.train_fraction) {
    split = random_split(data.size(), *config.train_fraction, config.split_seed);
  } else {
    split.train.resize(data.size());
    std::iota(split.train.begin(), split.train.end(), std::size_t{0});
    split.validation = split.train;
  }
  if (split.train.empty()) throw InputError("training set is empty");
  if (split.validation.empty()) throw InputError("validation set is empty");
  return {std::move(data), std::move(split)};
}

DesignSpec design_for(const RunConfig& config, const Dataset& train) {
  DesignSpec d;
  if (config.pairwise_interactions) d.interactions = pairwise_interactions(train.covariate_count(), train.intercept_column());
  d.z_encoding = config.z_encoding;
  if (config.y_sample == "positive_z") {
    d.y_sample = YSample::PositiveZ;
  } else if (config.y_sample == "auto") {
    bool zeros = false, coded = true;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.z()[i] == 0) {
        zeros = true;
        coded = coded && train.y()[i] == 0.0;
      }
    }
    if (zeros && coded) d.y_sample = YSample::PositiveZ;
  }
  return d;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config, std::uint64_t seed,
                    const std::vector<fs::path>& outputs) {
  json files = json::array();
  for (const auto& p : outputs) files.push_back({{"path", p.filename().string()}, {"fnv1a", file_digest(p)}});
  const json m = {{"command", command},
                  {"config", config},
                  {"config_hash", hex64(fnv1a(config.dump()))},
                  {"seed", seed},
                  {"versions",
                   {{"jointdr", kVersion},
                    {"model_format", kModelFormatVersion},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"boost", BOOST_LIB_VERSION}}},
                  {"outputs", files}};
  write_json(dir / ("manifest_" + command + ".json"), m);
}

FitOutput cmd_fit(const RunConfig& config, bool baselines) {
  const auto prepared = prepare_data(config);
  const auto train = prepared.train();
  const auto design = design_for(config, train);
  const auto grid = y_grid_for(config, train, design);
  auto model = fit_dr(train, grid, design, fit_options(config));

  json status_y = json::object(), status_z = json::object();
  for (auto s : model.path().y_status) status_y[std::string(to_string(s))] = status_y.value(std::string(to_string(s)), 0) + 1;
  for (auto s : model.path().z_status) status_z[std::string(to_string(s))] = status_z.value(std::string(to_string(s)), 0) + 1;
  FitOutput out{std::move(model), std::nullopt, std::nullopt, json::object()};
  out.report = {{"rows", prepared.data.size()},
                {"train_rows", prepared.split.train.size()},
                {"validation_rows", prepared.split.validation.size()},
                {"covariates", prepared.data.covariate_names()},
                {"y_thresholds", grid.size()},
                {"z_support", out.model.z_support()},
                {"y_sample", to_string(design.y_sample)},
                {"y_status_counts", status_y},
                {"z_status_counts", status_z}};

  const auto& dir = config.output_dir;
  std::vector<fs::path> files{dir / "model.json", dir / "fit_report.json"};
  write_json(files[0], to_json(out.model));
  if (baselines) {
    out.poisson_gamma = fit_poisson_gamma(train);
    out.copula = fit_gaussian_copula(train);
    out.report["copula_clamped_rows"] = out.copula->clamped_rows;
    files.push_back(dir / "poisson_gamma.json");
    files.push_back(dir / "gaussian_copula.json");
    write_json(files[2], to_json(*out.poisson_gamma));
    write_json(files[3], to_json(*out.copula));
  }
  write_json(files[1], out.report);
  if (config.train_fraction) {
    files.push_back(dir / "train_index.txt");
    write_index_file(files.back(), prepared.split.train);
  }
  write_manifest(dir, "fit", config.to_json(), config.split_seed, files);
  return out;
}

double chi_square(std::span<const double> observed, std::span<const double> fitted) {
  if (observed.size() != fitted.size()) throw InputError("chi-square tables differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (fitted[i] > 0.0) s += (observed[i] - fitted[i]) * (observed[i] - fitted[i]) / fitted[i];
  }
  return s;
}

GofOutput gof_table(const Dataset& data, const DrModel& model, const PoissonGammaModel* pg,
                    const GaussianCopulaModel* copula, std::size_t workers) {
  const auto& support = model.z_support();
  std::vector<double> observed(support.size(), 0.0);
  for (int z : data.z()) {
    const auto it = std::lower_bound(support.begin(), support.end(), z);
    if (it != support.end() && *it == z) observed[static_cast<std::size_t>(it - support.begin())] += 1.0;
  }
  const auto n = data.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const std::size_t m = support.size();
  // slots [0, m): raw masses, [m, 2m): rearranged masses
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(2 * m, 0.0));
  parallel_for(chunks, workers, [&](std::size_t c) {
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      const auto x = data.row(i);
      auto raw = model.raw_z_values(x);
      raw.push_back(1.0);
      for (std::size_t k = 0; k < m; ++k) partial[c][k] += raw[k] - (k ? raw[k - 1] : 0.0);
      const auto p = model.z_masses(x);
      for (std::size_t k = 0; k < m; ++k) partial[c][m + k] += p[k];
    }
  });
  std::vector<double> fitted(m, 0.0), rearranged(m, 0.0);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < m; ++k) {
      fitted[k] += p[k];
      rearranged[k] += p[m + k];
    }
  }

  GofOutput out;
  const auto add = [&](const std::string& name, const std::vector<double>& fit) {
    for (std::size_t k = 0; k < support.size(); ++k) out.rows.push_back({name, support[k], observed[k], fit[k]});
    out.chi_square[name] = chi_square(observed, fit);
  };
  add("dr", fitted);
  add("dr_rearranged", rearranged);
  if (pg) add("poisson_gamma", poisson_fitted_counts(pg->gamma_coefs, data.x(), support));
  if (copula) add("gaussian_copula", poisson_fitted_counts(copula->marg_z_coefs, data.x(), support));
  return out;
}

GofOutput cmd_gof(const RunConfig& config, const DrModel& model, const PoissonGammaModel* pg,
                  const GaussianCopulaModel* copula) {
  const auto prepared = prepare_data(config);
  const auto out = gof_table(prepared.eval(config.eval_set), model, pg, copula, config.workers);
  const auto path = config.output_dir / "gof.csv";
  {
    auto f = open_output(path);
    f << "model,z,observed,fitted\n";
    for (const auto& r : out.rows) {
      f << r.model << ',' << r.z << ',' << format_double(r.observed) << ',' << format_double(r.fitted) << '\n';
    }
    for (const auto& [name, chi2] : out.chi_square) f << name << ",chi_square,," << format_double(chi2) << '\n';
  }
  write_manifest(config.output_dir, "gof", config.to_json(), 0, {path});
  return out;
}

std::vector<VarRow> cmd_var(const RunConfig& config, const DrModel& model, const std::vector<Cohort>& cohorts,
                            const std::vector<double>& taus) {
  if (cohorts.empty() || taus.empty()) throw InputError("cmd_var needs at least one cohort and one tau");
  for (double t : taus) {
    if (!(t > 0.0 && t < 1.0)) throw InputError("tau must lie in (0, 1)");
  }
  const auto prepared = prepare_data(config);
  const auto eval = prepared.eval(config.eval_set);
  const double k = config.overhead_k;
  const JointModel jm(model, k);
  const std::size_t B = config.bootstrap_replicates;
  const WeightScheme scheme{config.bootstrap_scheme, config.bootstrap_seed};

  std::vector<Eigen::MatrixXd> xs;
  for (const auto& c : cohorts) {
    const auto rows = c.filter.select(eval);
    if (rows.empty()) throw InputError("cohort '" + c.name + "' selects no rows");
    xs.push_back(rows_of(eval.x(), rows));
  }

  // replicate values per (cohort, tau), flattened cohort-major
  std::vector<std::vector<double>> reps(cohorts.size() * taus.size());
  std::vector<std::size_t> flagged(cohorts.size(), 0);
  std::vector<QuantileResult> points;
  for (std::size_t c = 0; c < cohorts.size(); ++c) {
    const auto table = jm.average(xs[c], {}, config.workers);
    for (double t : taus) points.push_back(table.var(t, k));
  }
  if (!config.bootstrap_refit) {
    for (std::size_t c = 0; c < cohorts.size(); ++c) {
      const auto w = draw_weight_matrix(scheme, static_cast<std::size_t>(xs[c].rows()), B);
      const auto tables = jm.average_many(xs[c], w, config.workers);
      for (std::size_t t = 0; t < taus.size(); ++t) {
        for (const auto& tb : tables) reps[c * taus.size() + t].push_back(tb.var(taus[t], k).value);
      }
    }
  } else {
    const auto train = prepared.train();
    BootstrapConfig bc;
    bc.scheme = scheme;
    bc.replicates = B;
    bc.workers = config.workers;
    bc.overhead_k = k;
    bc.fit = fit_options(config);
    const Functional f = [&](const JointModel& m) {
      std::vector<double> v;
      for (const auto& x : xs) {
        const auto table = m.average(x);
        for (double t : taus) v.push_back(table.var(t, k).value);
      }
      return v;
    };
    const auto res = bootstrap_fit(train, model.y_grid(), model.design(), bc, f);
    for (std::size_t j = 0; j < reps.size(); ++j) reps[j] = res.component(j);
    std::fill(flagged.begin(), flagged.end(), res.flagged_count());
  }

  std::vector<VarRow> out;
  for (std::size_t c = 0; c < cohorts.size(); ++c) {
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const auto& r = reps[c * taus.size() + t];
      VarRow row;
      row.cohort = cohorts[c].name;
      row.rows = static_cast<std::size_t>(xs[c].rows());
      row.tau = taus[t];
      row.point = points[c * taus.size() + t].value;
      row.saturated = points[c * taus.size() + t].saturated;
      row.replicates = B;
      row.flagged = flagged[c];
      std::vector<double> finite;
      for (double v : r) {
        if (std::isfinite(v)) finite.push_back(v);
      }
      if (finite.size() >= 20) {
        const auto ci = percentile_ci(finite, 0.95);
        row.lo = ci.lo;
        row.hi = ci.hi;
      } else {
        row.lo = row.hi = std::numeric_limits<double>::quiet_NaN();
      }
      if (finite.size() >= 2) {
        double mean = 0.0, ss = 0.0;
        for (double v : finite) mean += v;
        mean /= static_cast<double>(finite.size());
        for (double v : finite) ss += (v - mean) * (v - mean);
        row.se = std::sqrt(ss / static_cast<double>(finite.size() - 1));
      }
      out.push_back(row);
    }
  }

  const auto path = config.output_dir / "var.csv";
  {
    auto f = open_output(path);
    f << "cohort,rows,tau,point,lo,hi,se,B,flagged_count,saturated,seed\n";
    for (const auto& r : out) {
      f << csv_field(r.cohort) << ',' << r.rows << ',' << format_double(r.tau) << ',' << format_double(r.point) << ','
        << format_double(r.lo) << ',' << format_double(r.hi) << ',' << format_double(r.se) << ',' << r.replicates
        << ',' << r.flagged << ',' << (r.saturated ? 1 : 0) << ',' << config.bootstrap_seed << '\n';
    }
  }
  write_manifest(config.output_dir, "var", config.to_json(), config.bootstrap_seed, {path});
  return out;
}

std::string_view to_string(CdfTarget t) {
  switch (t) {
    case CdfTarget::YGivenPositiveZ: return "y_given_positive_z";
    case CdfTarget::SPositive: return "s_positive";
    case CdfTarget::C: return "c";
  }
  return "";
}

CdfTarget cdf_target_from_string(std::string_view name) {
  for (auto t : {CdfTarget::YGivenPositiveZ, CdfTarget::SPositive, CdfTarget::C}) {
    if (to_string(t) == name) return t;
  }
  throw InputError("unknown CDF target '" + std::string(name) + "'");
}

std::vector<CdfRow> cdf_table(const Dataset& data, const DrModel& model, CdfTarget target, double k,
                              std::size_t workers) {
  const JointModel jm(model, k);
  std::vector<double> sample;  // outcomes entering the empirical CDF
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double y = data.y()[i];
    const int z = data.z()[i];
    switch (target) {
      case CdfTarget::YGivenPositiveZ:
        if (z > 0) sample.push_back(y);
        break;
      case CdfTarget::SPositive:
        if (y * z > 0.0) sample.push_back(y * z);
        break;
      case CdfTarget::C: sample.push_back(y * z + k * z); break;
    }
  }
  std::vector<double> args;
  if (target == CdfTarget::YGivenPositiveZ) {
    args.assign(model.y_grid().points().begin(), model.y_grid().points().end());
  } else {
    if (sample.empty()) throw InputError("no observations for the requested CDF target");
    const auto g = build_grid(sample, uniform_probs(std::min<std::size_t>(1000, sample.size())));
    args.assign(g.points().begin(), g.points().end());
  }

  const std::size_t m = args.size();
  // slot m accumulates the normalizer: P(Z > 0 | x_i), P(S > 0 | x_i) or 1
  const auto sums = summed_over_rows(
      jm, data.x(), m + 1,
      [&](const JointTable& t, std::vector<double>& acc) {
        switch (target) {
          case CdfTarget::YGivenPositiveZ:
            if (t.zero_mass() >= 1.0) return;
            for (std::size_t a = 0; a < m; ++a) acc[a] += (1.0 - t.zero_mass()) * t.y_given_positive_z_cdf(args[a]);
            acc[m] += 1.0 - t.zero_mass();
            return;
          case CdfTarget::SPositive: {
            const double f0 = t.aggregate_claim_cdf(0.0);
            if (f0 >= 1.0) return;
            for (std::size_t a = 0; a < m; ++a) acc[a] += t.aggregate_claim_cdf(args[a]) - f0;
            acc[m] += 1.0 - f0;
            return;
          }
          case CdfTarget::C:
            for (std::size_t a = 0; a < m; ++a) acc[a] += t.total_cost_cdf(args[a], k);
            break;
        }
        acc[m] += 1.0;
      },
      workers);
  if (sums[m] == 0.0) throw NumericalError("no evaluation row has positive claim probability");

  std::sort(sample.begin(), sample.end());
  std::vector<CdfRow> out;
  for (std::size_t a = 0; a < m; ++a) {
    const auto cnt = std::upper_bound(sample.begin(), sample.end(), args[a]) - sample.begin();
    const double emp = sample.empty() ? 0.0 : static_cast<double>(cnt) / static_cast<double>(sample.size());
    out.push_back({args[a], sums[a] / sums[m], emp});
  }
  return out;
}

std::vector<CdfRow> cmd_cdf(const RunConfig& config, const DrModel& model, CdfTarget target) {
  const auto prepared = prepare_data(config);
  const auto rows = cdf_table(prepared.eval(config.eval_set), model, target, config.overhead_k, config.workers);
  const auto path = config.output_dir / ("cdf_" + std::string(to_string(target)) + ".csv");
  {
    auto f = open_output(path);
    f << "argument,model_cdf,empirical_cdf\n";
    for (const auto& r : rows) {
      f << format_double(r.argument) << ',' << format_double(r.model_cdf) << ',' << format_double(r.empirical_cdf)
        << '\n';
    }
  }
  write_manifest(config.output_dir, "cdf_" + std::string(to_string(target)), config.to_json(), 0, {path});
  return rows;
}

void cmd_simulate(const DgpSpec& spec, const fs::path& output_csv, std::size_t workers) {
  const auto data = generate(spec, workers);
  {
    auto f = open_output(output_csv);
    write_csv(f, data);
  }
  const auto dir = output_csv.has_parent_path() ? output_csv.parent_path() : fs::path(".");
  write_manifest(dir, "simulate", to_json(spec), spec.seed, {output_csv});
}

}  // namespace jointdr
