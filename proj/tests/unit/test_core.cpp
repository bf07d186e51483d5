#include <catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "jointdr/core/dataset.hpp"
#include "jointdr/core/distributions.hpp"
#include "jointdr/core/error.hpp"
#include "jointdr/core/format.hpp"
#include "jointdr/core/grid.hpp"
#include "jointdr/core/link.hpp"
#include "jointdr/core/parallel.hpp"
#include "jointdr/core/random.hpp"

using namespace jointdr;
using Catch::Approx;

namespace {

// Standard normal CDF by composite Simpson quadrature of the density in long double.
long double quad_normal_cdf(long double u) {
  const long double lo = -40.0L;
  const int m = 200000;
  const long double h = (u - lo) / m;
  auto f = [](long double t) { return std::exp(-t * t / 2) / std::sqrt(2 * 3.14159265358979323846264338L); };
  long double s = f(lo) + f(u);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4 : 2) * f(lo + i * h);
  return s * h / 3;
}

}  // namespace

TEST_CASE("logit link at zero") {
  const auto v = link_eval(LinkFunction(LinkKind::Logit), 0.0);
  CHECK(v.cdf == 0.5);
  CHECK(v.pdf == 0.25);
  CHECK(v.r == 1.0);
  CHECK(link_eval(LinkFunction(LinkKind::Logit), 10.0).r == 1.0);
}

TEST_CASE("probit link at zero matches quadrature") {
  const auto v = link_eval(LinkFunction(LinkKind::Probit), 0.0);
  const long double cdf = quad_normal_cdf(0.0L);
  const long double pdf = 1.0L / std::sqrt(2 * 3.14159265358979323846264338L);
  CHECK(v.cdf == Approx(static_cast<double>(cdf)).epsilon(1e-12));
  CHECK(v.pdf == Approx(static_cast<double>(pdf)).epsilon(1e-12));
  CHECK(v.r == Approx(static_cast<double>(pdf / (cdf * (1 - cdf)))).epsilon(1e-10));
  CHECK(v.r == Approx(1.5958).margin(1e-4));
}

TEST_CASE("probit ratio matches quadrature at moderate indices") {
  const LinkFunction probit(LinkKind::Probit);
  for (double u : {-6.0, -2.5, -0.7, 1.3, 4.0}) {
    const long double c = quad_normal_cdf(u);
    const long double p = std::exp(-static_cast<long double>(u) * u / 2) / std::sqrt(2 * 3.14159265358979323846264338L);
    CHECK(probit.cdf(u) == Approx(static_cast<double>(c)).epsilon(1e-9));
    CHECK(probit.ratio(u) == Approx(static_cast<double>(p / (c * (1 - c)))).epsilon(1e-8));
  }
}

TEST_CASE("logit ratio is identically one") {
  const LinkFunction logit(LinkKind::Logit);
  for (int i = 0; i <= 6000; ++i) {
    const double u = -30.0 + i * 0.01;
    REQUIRE(std::abs(logit.ratio(u) - 1.0) < 1e-12);
  }
}

TEST_CASE("link cdf is strictly increasing and pdf positive") {
  for (auto kind : {LinkKind::Logit, LinkKind::Probit}) {
    const LinkFunction link(kind);
    double prev = -1.0;
    double prev_tail = 1.0;
    for (int i = 0; i <= 2000; ++i) {
      const double u = -8.0 + i * 0.008;
      const double c = link.cdf(u);
      if (c < 1.0 - 1e-10) {
        REQUIRE(c > prev);
      } else {
        // Past double resolution of Λ itself; compare 1 - Λ in log space.
        REQUIRE(link.log_ccdf(u) < prev_tail);
      }
      REQUIRE(link.pdf(u) > 0.0);
      prev = c;
      prev_tail = link.log_ccdf(u);
    }
  }
}

TEST_CASE("link pdf matches finite differences of the cdf") {
  for (auto kind : {LinkKind::Logit, LinkKind::Probit}) {
    const LinkFunction link(kind);
    for (int i = 0; i <= 160; ++i) {
      const double u = -8.0 + i * 0.1;
      const double h = 1e-5;
      // Right of zero difference 1 - Λ (held accurately in log space) instead of Λ.
      const double fd = u <= 0 ? (link.cdf(u + h) - link.cdf(u - h)) / (2 * h)
                               : (std::exp(link.log_ccdf(u - h)) - std::exp(link.log_ccdf(u + h))) / (2 * h);
      REQUIRE(std::abs(fd - link.pdf(u)) / link.pdf(u) < 1e-6);
    }
  }
}

TEST_CASE("links stay finite near saturation") {
  for (auto kind : {LinkKind::Logit, LinkKind::Probit}) {
    const LinkFunction link(kind);
    for (double u : {-35.0, -20.0, 20.0, 35.0}) {
      const auto v = link_eval(link, u);
      CHECK(v.cdf >= 0.0);
      CHECK(v.cdf <= 1.0);
      CHECK(v.pdf >= 0.0);
      CHECK(std::isfinite(v.r));
      CHECK(v.r > 0.0);
      CHECK(std::isfinite(link.log_cdf(u)));
      CHECK(std::isfinite(link.log_ccdf(u)));
    }
  }
  // Mills-ratio asymptote: R(u) ~ -u for u -> -inf under probit.
  CHECK(LinkFunction(LinkKind::Probit).ratio(-30.0) == Approx(30.0).epsilon(2e-3));
}

TEST_CASE("link_eval rejects non-finite input") {
  CHECK_THROWS_AS(link_eval(LinkFunction{}, std::numeric_limits<double>::quiet_NaN()), InputError);
  CHECK_THROWS_AS(link_eval(LinkFunction{}, std::numeric_limits<double>::infinity()), InputError);
}

TEST_CASE("link kind names round trip") {
  CHECK(link_kind_from_string(to_string(LinkKind::Logit)) == LinkKind::Logit);
  CHECK(link_kind_from_string(to_string(LinkKind::Probit)) == LinkKind::Probit);
  CHECK_THROWS_AS(link_kind_from_string("cloglog"), InputError);
}

TEST_CASE("build_grid examples") {
  const std::vector<double> v1{1, 2, 3, 4};
  const std::vector<double> p1{0.25, 0.5, 0.75, 1.0};
  auto g1 = build_grid(v1, p1);
  CHECK(std::vector<double>(g1.points().begin(), g1.points().end()) == v1);

  const std::vector<double> v2{5, 5, 5};
  const std::vector<double> p2{0.5, 1.0};
  auto g2 = build_grid(v2, p2);
  REQUIRE(g2.size() == 1);
  CHECK(g2[0] == 5.0);

  std::vector<double> v3(100);
  std::iota(v3.begin(), v3.end(), 1.0);
  std::reverse(v3.begin(), v3.end());
  auto g3 = build_grid(v3, uniform_probs(100));
  REQUIRE(g3.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(g3[i] == static_cast<double>(i + 1));
  CHECK(std::holds_alternative<EmpiricalQuantiles>(g3.source()));
}

TEST_CASE("build_grid top point is the sample maximum and output is strictly increasing") {
  Rng rng(11, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> v(n);
    for (auto& x : v) x = std::floor(uniform_open01(rng) * 8.0);  // heavy ties
    const auto probs = uniform_probs(1 + rng() % 30);
    const auto g = build_grid(v, probs);
    REQUIRE(g.back() == *std::max_element(v.begin(), v.end()));
    for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g[i] > g[i - 1]);
  }
}

TEST_CASE("build_grid rejects bad input") {
  const std::vector<double> v{1, 2};
  const std::vector<double> empty;
  const std::vector<double> ok{0.5, 1.0};
  CHECK_THROWS_AS(build_grid(empty, ok), InputError);
  CHECK_THROWS_AS(build_grid(v, std::vector<double>{0.0, 1.0}), InputError);
  CHECK_THROWS_AS(build_grid(v, std::vector<double>{0.5, 1.1}), InputError);
  CHECK_THROWS_AS(build_grid(v, std::vector<double>{0.5, 0.5}), InputError);
  CHECK_THROWS_AS(ThresholdGrid::from_points({1.0, 1.0}), InputError);
  CHECK_THROWS_AS(ThresholdGrid::from_points({}), InputError);
}

TEST_CASE("quantile rank follows the ceiling convention") {
  CHECK(quantile_rank(0.07, 100) == 7);
  CHECK(quantile_rank(0.071, 100) == 8);
  CHECK(quantile_rank(1.0, 100) == 100);
  CHECK(quantile_rank(1e-9, 100) == 1);
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(empirical_quantile(v, 0.5) == 2.0);
  CHECK(empirical_quantile(v, 0.51) == 3.0);
  CHECK(v == std::vector<double>{4, 1, 3, 2});
}

TEST_CASE("threshold grid lookup") {
  auto g = ThresholdGrid::from_points({1.0, 2.0, 3.0});
  CHECK(g.index_at_or_below(0.5) == ThresholdGrid::npos);
  CHECK(g.index_at_or_below(1.0) == 0);
  CHECK(g.index_at_or_below(2.5) == 1);
  CHECK(g.index_at_or_below(9.0) == 2);
}

TEST_CASE("dataset validation") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0.1, 1, 0.2, 1, 0.3;
  Dataset ok(x, {1.0, 2.0, 3.0}, {0, 1, 1}, {"const", "a"});
  CHECK(ok.size() == 3);
  CHECK(ok.intercept_column() == 0);
  CHECK(ok.z_support() == std::vector<int>{0, 1});
  const std::vector<std::size_t> rows{2, 2, 0};
  auto sub = ok.subset(rows);
  CHECK(sub.y()[0] == 3.0);
  CHECK(sub.y()[2] == 1.0);

  CHECK_THROWS_AS(Dataset(x, {1.0, 2.0}, {0, 1, 1}, {"const", "a"}), InputError);
  CHECK_THROWS_AS(Dataset(x, {1.0, 2.0, 3.0}, {0, -1, 1}, {"const", "a"}), InputError);
  CHECK_THROWS_AS(Dataset(x, {1.0, NAN, 3.0}, {0, 1, 1}, {"const", "a"}), InputError);
  CHECK_THROWS_AS(Dataset(x, {1.0, 2.0, 3.0}, {0, 1, 1}, {"const"}), InputError);
  Eigen::MatrixXd no_int = x;
  no_int.col(0).setConstant(2.0);
  CHECK_THROWS_AS(Dataset(no_int, {1.0, 2.0, 3.0}, {0, 1, 1}, {"c", "a"}), InputError);
  CHECK_NOTHROW(Dataset(no_int, {1.0, 2.0, 3.0}, {0, 1, 1}, {"c", "a"}, false));
  Eigen::MatrixXd two_int(3, 2);
  two_int.setOnes();
  CHECK_THROWS_AS(Dataset(two_int, {1.0, 2.0, 3.0}, {0, 1, 1}, {"c", "d"}), InputError);
  Eigen::MatrixXd empty(0, 1);
  CHECK_THROWS_AS(Dataset(empty, {}, {}, {"c"}), InputError);
}

TEST_CASE("philox matches known-answer vectors") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::apply(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::apply(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::apply(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("philox streams are reproducible and distinct") {
  Rng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint32_t> va, vb, vc, vd;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);

  for (std::uint64_t skip : {0u, 1u, 3u, 4u, 5u, 17u}) {
    Rng s(42, 7);
    s.discard(skip);
    CHECK(s() == va[skip]);
  }
  Rng partial(42, 7);
  partial();
  partial.discard(6);
  CHECK(partial() == va[7]);
}

TEST_CASE("substream ids do not collide on small grids") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t p = 0; p < 100; ++p) {
    for (std::uint64_t c = 0; c < 100; ++c) seen.insert(substream(p, c));
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("uniform_open01 stays strictly inside the unit interval with the right mean") {
  Rng rng(1, 2);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform_open01(rng);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 3 * std::sqrt(1.0 / 12 / n) + 1e-12);
}

TEST_CASE("parallel_for covers every index and rethrows the lowest failure") {
  for (std::size_t workers : {1u, 3u}) {
    std::vector<int> hit(1000, 0);
    parallel_for(hit.size(), workers, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));

    try {
      parallel_for(100, workers, [](std::size_t i) {
        if (i == 40 || i == 70) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "40");
    }
  }
}

TEST_CASE("deterministic_mean is identical for every worker count") {
  auto f = [](std::size_t i) { return std::sin(static_cast<double>(i)) * 1e6 + 1e-6 * static_cast<double>(i); };
  const double m1 = deterministic_mean(12345, 1, f);
  for (std::size_t w : {2u, 3u, 8u}) CHECK(deterministic_mean(12345, w, f) == m1);
  CHECK(deterministic_mean(2, 1, [](std::size_t i) { return i == 0 ? 0.2 : 0.4; }) == Approx(0.3));
}

TEST_CASE("distribution helpers are mutually consistent") {
  for (double p : {1e-8, 0.01, 0.3, 0.5, 0.9, 0.999999}) {
    CHECK(dist::normal_cdf(dist::normal_quantile(p)) == Approx(p).epsilon(1e-10));
    CHECK(dist::gamma_cdf(dist::gamma_quantile(p, 3.0, 0.2), 3.0, 0.2) == Approx(p).epsilon(1e-10));
  }
  for (double lam : {0.05, 1.0, 7.5}) {
    double cum = 0.0;
    for (int k = 0; k < 40; ++k) {
      cum += std::exp(dist::poisson_log_pmf(k, lam));
      REQUIRE(dist::poisson_cdf(k, lam) == Approx(cum).epsilon(1e-12));
    }
    for (double u : {0.001, 0.2, 0.5, 0.77, 0.9999}) {
      const int q = dist::poisson_quantile(u, lam);
      REQUIRE(dist::poisson_cdf(q, lam) >= u);
      if (q > 0) REQUIRE(dist::poisson_cdf(q - 1, lam) < u);
    }
  }
  // Gamma density integrates to its CDF (trapezoid oracle).
  double acc = 0.0, prev = 0.0;
  const double h = 1e-4;
  for (int i = 1; i <= 40000; ++i) {
    const double y = i * h;
    const double f = std::exp(dist::gamma_log_pdf(y, 1.5, 0.2));
    acc += 0.5 * (prev + f) * h;
    prev = f;
  }
  CHECK(acc == Approx(dist::gamma_cdf(4.0, 1.5, 0.2)).epsilon(1e-6));
}

TEST_CASE("samplers match their first two moments") {
  Rng rng(5, 0);
  const int n = 200000;
  double sg = 0, sg2 = 0, sp = 0, sp2 = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double g = dist::sample_gamma(rng, 2.0, 0.2);
    const double p = dist::sample_poisson(rng, 3.0);
    const double z = dist::sample_normal(rng);
    sg += g; sg2 += g * g; sp += p; sp2 += p * p; sn += z; sn2 += z * z;
    se += dist::sample_exponential(rng);
  }
  const double mg = sg / n, vg = sg2 / n - mg * mg;
  CHECK(std::abs(mg - 2.0) < 4 * std::sqrt(0.8 / n));
  CHECK(vg == Approx(0.8).epsilon(0.03));
  const double mp = sp / n, vp = sp2 / n - mp * mp;
  CHECK(std::abs(mp - 3.0) < 4 * std::sqrt(3.0 / n));
  CHECK(vp == Approx(3.0).epsilon(0.03));
  CHECK(std::abs(sn / n) < 4 / std::sqrt(n));
  CHECK(sn2 / n == Approx(1.0).epsilon(0.02));
  CHECK(std::abs(se / n - 1.0) < 4 / std::sqrt(n));
}

TEST_CASE("FNV-1a matches the published 64-bit test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
  CHECK(hex64(0xaf63dc4c8601ec8cull) == "af63dc4c8601ec8c");
}
