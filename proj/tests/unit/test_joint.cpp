#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jointdr/core/error.hpp"
#include "jointdr/core/random.hpp"
#include "jointdr/joint/joint_model.hpp"
#include "toy_models.hpp"

using namespace jointdr;
using Catch::Approx;
using toy::logit;

namespace {

const std::vector<double> kOne{1.0};

Dataset claims_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
  std::vector<double> y(n);
  std::vector<int> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform_open01(rng);
    x(static_cast<Eigen::Index>(i), 0) = 1.0;
    x(static_cast<Eigen::Index>(i), 1) = u;
    z[i] = std::min(3, static_cast<int>(-std::log(uniform_open01(rng)) * (0.4 + u)));
    y[i] = std::exp(0.5 + u - 0.2 * z[i] + 0.5 * (uniform_open01(rng) - 0.5)) * 10;
  }
  return Dataset(x, std::move(y), std::move(z), {"const", "u"});
}

}  // namespace

TEST_CASE("two-point support joint CDF by hand") {
  // p(0) = 0.4, F_Y(y|0) = 0.5, F_Y(y|1) = 0.25 on a single grid point.
  const JointModel m(toy::intercept_model({10.0}, {0.0}, {logit(0.25)}, {0, 1}, {logit(0.4)}), 0.0);
  CHECK(joint_cdf(m, kOne, 10.0, 1) == Approx(0.35).epsilon(1e-12));
  CHECK(joint_cdf(m, kOne, 10.0, 0) == Approx(0.2).epsilon(1e-12));
  CHECK(joint_cdf(m, kOne, 9.0, 1) == 0.0);
  CHECK_THROWS_AS(joint_cdf(m, kOne, 10.0, 2), InputError);
}

TEST_CASE("joint CDF factorizes when the Y slice does not depend on z") {
  const JointModel m(toy::intercept_model({1, 2, 3}, {-1.0, 0.5, 2.0}, {0, 0, 0}, {0, 1, 2}, {logit(0.3), logit(0.8)}));
  const auto t = m.at(kOne);
  for (double y : {0.5, 1.0, 2.2, 3.0, 9.0}) {
    for (int z : {0, 1, 2}) {
      CHECK(t.joint_cdf(y, z) == Approx(eval_cdf_y(m.dr(), kOne, 0, y) * eval_cdf_z(m.dr(), kOne, z)).margin(1e-15));
    }
  }
}

TEST_CASE("total mass is one at the top of the grid") {
  Rng rng(1, 1);
  for (int rep = 0; rep < 20; ++rep) {
    const JointModel m(toy::random_model(rng), 1.0);
    const std::vector<double> x{1.0, uniform_open01(rng)};
    const auto t = m.at(x);
    CHECK(t.marginal_y_cdf(m.dr().y_grid().back()) == Approx(1.0).epsilon(1e-14));
    CHECK(t.aggregate_claim_cdf(5 * m.dr().y_grid().back() + 1) == Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("aggregate claim CDF examples") {
  // p(0) = 0.7, F_Y(5|1) = 0.6.
  const JointModel m(toy::intercept_model({5.0, 8.0}, {logit(0.6), 30.0}, {0, 0}, {0, 1}, {logit(0.7)}));
  CHECK(aggregate_claim_cdf(m, kOne, 0.0) == eval_cdf_z(m.dr(), kOne, 0));
  CHECK(aggregate_claim_cdf(m, kOne, 5.0) == Approx(0.88).epsilon(1e-12));
  CHECK(aggregate_claim_cdf(m, kOne, 4.99) == Approx(0.7).epsilon(1e-12));
  CHECK_THROWS_AS(aggregate_claim_cdf(m, kOne, -1.0), InputError);
}

TEST_CASE("total cost CDF examples") {
  // k = 200, p(0) = 0.9, F_Y(300|1) = 0.5.
  const JointModel m(toy::intercept_model({300.0, 400.0}, {0.0, 30.0}, {0, 0}, {0, 1}, {logit(0.9)}), 200.0);
  CHECK(total_cost_cdf(m, kOne, 500.0) == Approx(0.95).epsilon(1e-12));
  CHECK(total_cost_cdf(m, kOne, 150.0) == Approx(0.9).epsilon(1e-12));
  CHECK(total_cost_cdf(m, kOne, 0.0) == Approx(0.9).epsilon(1e-12));
  CHECK(total_cost_cdf(m, kOne, -1.0) == 0.0);
}

TEST_CASE("VaR examples") {
  const JointModel m(toy::intercept_model({50.0, 100.0}, {logit(0.5), 30.0}, {0, 0}, {0, 1}, {logit(0.8)}), 0.0);
  // F_C: 0.8 on [0, 50), 0.9 on [50, 100), 1 from 100.
  CHECK(var(m, kOne, 0.5).value == 0.0);
  CHECK(var(m, kOne, 0.8).value == 0.0);
  CHECK(var(m, kOne, 0.85).value == 50.0);
  CHECK(var(m, kOne, 0.9).value == 50.0);
  CHECK(var(m, kOne, 0.95).value == 100.0);
  CHECK_THROWS_AS(var(m, kOne, 1.0), InputError);
}

TEST_CASE("VaR equals brute-force breakpoint enumeration on random toy models") {
  Rng rng(555, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const double k = std::vector<double>{0.0, 1.0, 200.0, 0.37}[rng() % 4];
    const JointModel m(toy::random_model(rng), k);
    const std::vector<double> x{1.0, uniform_open01(rng)};
    for (double tau : {0.05, 0.3, 0.5, 0.77, 0.95, 0.999}) {
      REQUIRE(var(m, x, tau).value == toy::brute_force_var(m.dr(), x, k, tau));
    }
  }
}

TEST_CASE("invariants on random toy models") {
  Rng rng(77, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const JointModel m(toy::random_model(rng), 1.0);
    const std::vector<double> x{1.0, 2 * uniform_open01(rng) - 0.5};
    const auto t = m.at(x);
    const double top = m.dr().y_grid().back();
    double prev_j = 0.0, prev_s = 0.0, prev_c = 0.0;
    for (double a = 0.0; a < 5 * (top + 1); a += 0.1) {
      const double j = t.marginal_y_cdf(a), s = t.aggregate_claim_cdf(a), c = t.total_cost_cdf(a, 1.0);
      REQUIRE(j >= prev_j);
      REQUIRE(s >= prev_s);
      REQUIRE(c >= prev_c);
      REQUIRE(j <= 1.0 + 1e-12);
      REQUIRE(s <= 1.0 + 1e-12);
      // k = 0 collapses total cost onto the aggregate claim.
      REQUIRE(std::abs(t.total_cost_cdf(a, 0.0) - s) < 1e-12);
      prev_j = j, prev_s = s, prev_c = c;
    }
    REQUIRE(t.aggregate_claim_cdf(0.0) == eval_cdf_z(m.dr(), x, 0));
    double prev_v = -1.0;
    for (double tau = 0.01; tau < 1.0; tau += 0.01) {
      const double v = t.var(tau, 1.0).value;
      REQUIRE(v >= prev_v);
      prev_v = v;
    }
    const auto mixed = t.total_cost_distribution(1.0);
    if (!mixed.values.empty()) {
      REQUIRE(mixed.atom_at_zero <= mixed.values.front());
      REQUIRE(std::is_sorted(mixed.values.begin(), mixed.values.end()));
      REQUIRE(mixed.values.back() <= 1.0 + 1e-12);
    }
    for (double a : {0.0, 0.5, 3.0, top}) REQUIRE(mixed.at(a) == t.total_cost_cdf(a, 1.0));
  }
}

TEST_CASE("population average is the mean of conditional values") {
  const JointModel m(toy::intercept_model({1.0}, {0.0}, {0.0}, {0, 1}, {logit(0.2)}));
  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  CHECK(population_average(m, one, [](const JointTable& t) { return t.z_cdf(0); }) == Approx(0.2).epsilon(1e-14));

  CoefficientPath p{.y_grid = ThresholdGrid::from_points({1.0})};
  p.y_coef.push_back(Eigen::Vector3d(0.0, 0.0, 0.0));
  p.y_status.push_back(FitStatus::Converged);
  p.z_grid = {0};
  p.z_coef.push_back(Eigen::Vector2d(logit(0.2), logit(0.4) - logit(0.2)));
  p.z_status.push_back(FitStatus::Converged);
  const JointModel two(DrModel(std::move(p), DrLinks{}, {0, 1}, DesignSpec{}, 2));
  Eigen::MatrixXd xs(2, 2);
  xs << 1, 0, 1, 1;
  CHECK(population_average(two, xs, [](const JointTable& t) { return t.z_cdf(0); }) == Approx(0.3).epsilon(1e-14));
  CHECK_THROWS_AS(population_average(two, Eigen::MatrixXd(0, 2), [](const JointTable&) { return 0.0; }), InputError);
}

TEST_CASE("intercept-only fit: averaged Z CDF equals the empirical CDF") {
  auto d = claims_data(2000, 3);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(d.size()), 1);
  Dataset io(ones, std::vector<double>(d.y().begin(), d.y().end()), std::vector<int>(d.z().begin(), d.z().end()), {"const"});
  const JointModel m(fit_dr(io, build_grid(io.y(), uniform_probs(10)), DesignSpec{}));
  for (int z : io.z_support()) {
    const double avg = population_average(m, ones, [z](const JointTable& t) { return t.z_cdf(z); });
    const double emp = static_cast<double>(std::count_if(io.z().begin(), io.z().end(), [z](int v) { return v <= z; })) /
                       static_cast<double>(io.size());
    CHECK(std::abs(avg - emp) < 1e-9);
  }
}

TEST_CASE("cohort tables are exact row averages and independent of worker count") {
  const auto d = claims_data(1500, 8);
  const JointModel m(fit_dr(d, build_grid(d.y(), uniform_probs(30)), DesignSpec{}), 1.0);
  const Eigen::MatrixXd xs = d.x().topRows(300);
  const auto cohort = m.average(xs);
  const auto cohort4 = m.average(xs, {}, 4);
  for (double a : {0.0, 5.0, 12.0, 20.0, 40.0}) {
    const double avg_c = population_average(m, xs, [a](const JointTable& t) { return t.total_cost_cdf(a, 1.0); });
    CHECK(cohort.total_cost_cdf(a, 1.0) == Approx(avg_c).margin(1e-13));
    CHECK(cohort4.total_cost_cdf(a, 1.0) == cohort.total_cost_cdf(a, 1.0));
    const double avg_s = population_average(m, xs, [a](const JointTable& t) { return t.aggregate_claim_cdf(a); }, 3);
    CHECK(cohort.aggregate_claim_cdf(a) == Approx(avg_s).margin(1e-13));
  }

  // Weighted columns equal explicit weighted averages.
  Eigen::MatrixXd w(300, 2);
  Rng rng(2, 2);
  for (Eigen::Index i = 0; i < 300; ++i) w(i, 0) = rng() % 3, w(i, 1) = uniform_open01(rng);
  const auto many = m.average_many(xs, w);
  std::vector<double> w1(300);
  for (Eigen::Index i = 0; i < 300; ++i) w1[static_cast<std::size_t>(i)] = w(i, 1);
  const auto single = m.average(xs, w1);
  CHECK(many[1].var(0.9, 1.0).value == single.var(0.9, 1.0).value);
  CHECK(many[1].total_cost_cdf(15.0, 1.0) == Approx(single.total_cost_cdf(15.0, 1.0)).margin(1e-14));
}

TEST_CASE("sampling from the fitted joint law reproduces the S and C CDFs") {
  const auto d = claims_data(2000, 21);
  const JointModel m(fit_dr(d, build_grid(d.y(), uniform_probs(50)), DesignSpec{}), 1.0);
  const std::vector<double> x{1.0, 0.6};
  const auto t = m.at(x);
  const auto masses = m.dr().z_masses(x);
  const auto& support = m.dr().z_support();
  Rng rng(9, 9);
  const int nsim = 40000;
  std::vector<double> s(nsim), c(nsim);
  for (int i = 0; i < nsim; ++i) {
    double u = uniform_open01(rng), acc = 0.0;
    std::size_t k = 0;
    while (k + 1 < support.size() && acc + masses[k] < u) acc += masses[k++];
    const int z = support[k];
    const auto slice = m.dr().y_slice(x, z);
    const double v = uniform_open01(rng);
    const auto it = std::lower_bound(slice.values.begin(), slice.values.end(), v);
    const double y = slice.points[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - slice.values.begin(), static_cast<std::ptrdiff_t>(slice.points.size()) - 1))];
    s[static_cast<std::size_t>(i)] = y * z;
    c[static_cast<std::size_t>(i)] = y * z + z;
  }
  std::sort(s.begin(), s.end());
  std::sort(c.begin(), c.end());
  double worst = 0.0;
  for (double a = 0.0; a < 120.0; a += 0.5) {
    const double es = static_cast<double>(std::upper_bound(s.begin(), s.end(), a) - s.begin()) / nsim;
    const double ec = static_cast<double>(std::upper_bound(c.begin(), c.end(), a) - c.begin()) / nsim;
    worst = std::max({worst, std::abs(es - t.aggregate_claim_cdf(a)), std::abs(ec - t.total_cost_cdf(a, 1.0))});
  }
  CHECK(worst < 3.0 / std::sqrt(static_cast<double>(nsim)));
}

TEST_CASE("query rows export as CSV") {
  std::vector<QueryRow> rows{{"var", x_key(std::vector<double>{1.0, 0.5}), 0.95, 123.5}, {"cdf_c", "cohort,a", 10, 0.25}};
  std::ostringstream os;
  write_query_csv(os, rows);
  const auto text = os.str();
  CHECK(text.rfind("query_type,key,argument,value\n", 0) == 0);
  CHECK(text.find(",0.95,123.5\n") != std::string::npos);
  CHECK(text.find("\"cohort,a\",10,0.25\n") != std::string::npos);
  CHECK(x_key(std::vector<double>{1.0, 0.5}) == x_key(std::vector<double>{1.0, 0.5}));
  CHECK(x_key(std::vector<double>{1.0, 0.5}) != x_key(std::vector<double>{1.0, 0.25}));
  CHECK(x_key(std::vector<double>{1.0, 0.5}).size() == 16);
}
