#include "covkern/bandwidth.hpp"
#include "covkern/error.hpp"
#include "covkern/random.hpp"
#include "covkern/stats.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace covkern;

namespace {

double gauss(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

// Textbook Silverman rule with its own quantile code.
double textbook_silverman(std::vector<double> x)
{
  std::sort(x.begin(), x.end());
  const double n = double(x.size());
  double mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  auto q = [&](double p) {
    const double pos = p * (n - 1);
    const auto lo = std::size_t(std::floor(pos));
    const double t = pos - double(lo);
    return lo + 1 < x.size() ? x[lo] + t * (x[lo + 1] - x[lo]) : x[lo];
  };
  return 0.9 * std::min(sd, (q(0.75) - q(0.25)) / 1.34) * std::pow(n, -0.2);
}

// Leave-one-out least-squares CV written directly from its definition.
double brute_cv(const TransformedSample& s, const CovariateDistribution& d, double h)
{
  const std::size_t n = s.n();
  const auto& grid = d.grid();
  std::vector<double> sq(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += gauss((grid[j] - s.z[i]) / h) / h / gstar_at(d, s.z[i]);
    const double f = d.g_star()[j] * acc / double(n);
    sq[j] = f * f;
  }
  double loo = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        acc += gauss((s.z[i] - s.z[j]) / h) / h / gstar_at(d, s.z[j]);
    loo += gstar_at(d, s.z[i]) * acc / double(n - 1);
  }
  return simpson(sq, grid.step()) - 2.0 * loo / double(n);
}

} // namespace

TEST_SUITE("bandwidth")
{
  TEST_CASE("Poisson reciprocal moment")
  {
    CHECK(poisson_reciprocal_moment(1.0) == doctest::Approx(0.48482).epsilon(1e-4 / 0.48482));
    const double m = 500.0;
    CHECK(poisson_reciprocal_moment(m) == doctest::Approx((1.0 / m) * (1.0 + 1.0 / m)).epsilon(0.02));
    const double s = 0.01;
    CHECK(std::abs(poisson_reciprocal_moment(s) - std::exp(-s) * (s + s * s / 4.0 + s * s * s / 18.0)) < 1e-9);
    CHECK_THROWS_AS(poisson_reciprocal_moment(0.0), ParameterError);
    CHECK_THROWS_AS(poisson_reciprocal_moment(-1.0), ParameterError);
  }

  TEST_CASE("Poisson reciprocal moment agrees with Monte Carlo")
  {
    Rng rng(77);
    for (double m : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0}) {
      std::poisson_distribution<long> P(m);
      const int draws = 1000000;
      double sum = 0.0, sum2 = 0.0;
      for (int i = 0; i < draws; ++i) {
        const long n = P(rng);
        const double v = n > 0 ? 1.0 / double(n) : 0.0;
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / draws;
      const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
      CAPTURE(m);
      CHECK(std::abs(poisson_reciprocal_moment(m) - mean) < 3.0 * se);
    }
  }

  TEST_CASE("Silverman")
  {
    const double c = std::sqrt(0.99);
    std::vector<double> z(100);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = i % 2 ? c : -c;
    TransformedSample s{z, std::vector<double>(z.size(), 1.0)};
    CHECK(silverman(s).h == doctest::Approx(0.358297).epsilon(1e-6));

    Rng rng(3);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> x(1000);
    for (double& v : x)
      v = N(rng);
    TransformedSample t{x, std::vector<double>(x.size(), 1.0)};
    CHECK(std::abs(silverman(t).h - textbook_silverman(x)) < 1e-12);

    auto y = x;
    for (double& v : y)
      v = 2.5 * v + 4.0;
    TransformedSample u{y, t.weights};
    CHECK(silverman(u).h == doctest::Approx(2.5 * silverman(t).h).epsilon(1e-12));
    CHECK_THROWS_AS(silverman(TransformedSample{{1.0}, {1.0}}), ParameterError);
  }

  TEST_CASE("rule of thumb reduces to the normal-scale rule when g* is flat")
  {
    const auto d = testutil::uniform_dist(-8.0, 8.0, 4001);
    Rng rng(21);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> z(200);
    for (double& v : z)
      v = N(rng);
    const auto s = TransformedSample::from_values(z, d);
    const auto rt = rule_of_thumb(s, d, Kernel::gaussian());
    const double classical = std::pow(4.0 / (3.0 * 200.0), 0.2) * stats::sd(z);
    CHECK(rt.h == doctest::Approx(classical).epsilon(0.02));
    CHECK(rt.h > 0.0);
    CHECK_THROWS(rule_of_thumb(TransformedSample::from_values({0.1}, d), d, Kernel::gaussian()));
  }

  TEST_CASE("rule of thumb is scale equivariant")
  {
    const auto base = spatial_cdf(testutil::plane_xy(150));
    const double a = 2.0, b = 1.5;
    const UniformGrid g2(a * base.z_min() + b, a * base.z_max() + b, base.size());
    std::vector<double> gs(base.g_star().begin(), base.g_star().end());
    for (double& v : gs)
      v /= a;
    const auto moved = CovariateDistribution::from_density(g2, gs, base.area());
    const std::vector<double> z{0.3, 0.5, 0.7, 0.8, 0.9, 1.0, 1.05, 1.2, 1.3, 1.6, 1.1, 0.95};
    std::vector<double> z2 = z;
    for (double& v : z2)
      v = a * v + b;
    const auto h0 = rule_of_thumb(TransformedSample::from_values(z, base), base, Kernel::gaussian()).h;
    const auto h1 =
      rule_of_thumb(TransformedSample::from_values(z2, moved), moved, Kernel::gaussian()).h;
    CHECK(h1 == doctest::Approx(a * h0).epsilon(0.01));

    const auto s0 = TransformedSample::from_values(z, base);
    BandwidthReport r0{"rt", h0, {}, false, {}}, r1{"rt", h1, {}, false, {}};
    CHECK(pilot_bandwidth(r1, z.size()) == doctest::Approx(a * pilot_bandwidth(r0, s0.n())).epsilon(0.01));
  }

  TEST_CASE("cross-validation matches brute-force leave-one-out")
  {
    const auto d = spatial_cdf(testutil::plane_xy(120));
    Rng rng(8);
    std::uniform_real_distribution<double> U(0.2, 1.8);
    const std::vector<double> hs{0.05, 0.1, 0.2, 0.4};
    for (std::size_t n = 2; n <= 8; ++n) {
      std::vector<double> z(n);
      for (double& v : z)
        v = U(rng);
      const auto s = TransformedSample::from_values(z, d);
      for (double h : hs) {
        const double ours = cv_score(s, d, Kernel::gaussian(), h);
        const double ref = brute_cv(s, d, h);
        CAPTURE(n);
        CAPTURE(h);
        CHECK(std::abs(ours - ref) < 1e-10 * std::max(1.0, std::abs(ref)));
      }
    }
  }

  TEST_CASE("cross-validation selection")
  {
    const auto d = spatial_cdf(testutil::plane_xy(120));
    const auto s = TransformedSample::from_values({0.3, 0.6, 0.65, 0.9, 1.0, 1.1, 1.2, 1.5}, d);
    const auto grid = default_h_grid(silverman(s).h);
    REQUIRE(grid.size() == 40);
    CHECK(grid.front() == doctest::Approx(silverman(s).h / 10));
    CHECK(grid.back() == doctest::Approx(silverman(s).h * 10));
    const auto a = cv_bandwidth(s, d, Kernel::gaussian(), grid);
    const auto b = cv_bandwidth(s, d, Kernel::gaussian(), grid);
    CHECK(a.h == b.h);
    CHECK(a.curve == b.curve);

    const auto narrow = log_spaced(1e-3, 2e-3, 5);
    const auto c = cv_bandwidth(s, d, Kernel::gaussian(), narrow);
    CHECK(c.boundary_hit);
    CHECK(c.h == narrow.back());
    CHECK_THROWS_AS(cv_bandwidth(s, d, Kernel::gaussian(), std::vector<double>{0.2, 0.1}),
                    ParameterError);
  }

  TEST_CASE("grid_argmin")
  {
    const std::vector<double> v{3.0, std::nan(""), 1.0, 2.0};
    CHECK(grid_argmin(v) == std::pair<std::size_t, bool>{2, false});
    const std::vector<double> w{3.0, 2.0, 1.0};
    CHECK(grid_argmin(w).second);
    const std::vector<double> bad{std::nan(""), INFINITY};
    CHECK_THROWS_AS(grid_argmin(bad), NumericError);
  }

  TEST_CASE("AMISE oracle example")
  {
    const Kernel k = Kernel::gaussian();
    const double a = poisson_reciprocal_moment(100.0);
    CHECK(a == doctest::Approx(0.010101).epsilon(1e-3));
    CHECK(std::abs(amise_optimal_bandwidth(a, 100.0, 1.0, k) - 0.30935) < 1e-3);
    CHECK(amise_optimal_bandwidth(a, 100.0, 2.0, k) ==
          doctest::Approx(std::pow(2.0, -0.2) * amise_optimal_bandwidth(a, 100.0, 1.0, k)));
  }

  TEST_CASE("AMISE oracle from a known rho")
  {
    const auto d = testutil::uniform_dist(0.0, 1.0);
    auto rho2 = [](double z) { return -std::sin(3.0 * z) * 9.0 * 50.0; };
    auto rho2x = [&](double z) { return std::sqrt(2.0) * rho2(z); };
    const auto r1 = h_amise_oracle(rho2, d, 50.0, Kernel::gaussian());
    const auto r2 = h_amise_oracle(rho2x, d, 50.0, Kernel::gaussian());
    CHECK(r2.h == doctest::Approx(std::pow(2.0, -0.2) * r1.h).epsilon(1e-12));
    // psi = rho'' g* / m = -9 sin(3z); R(psi) = 81 (1/2 - sin(6)/12).
    const double curv = 81.0 * (0.5 - std::sin(6.0) / 12.0);
    CHECK(r1.diagnostics.at("curvature") == doctest::Approx(curv).epsilon(1e-8));
    CHECK_THROWS(h_amise_oracle([](double) { return 0.0; }, d, 50.0, Kernel::gaussian()));
  }

  TEST_CASE("closed form minimises AMISE on a log grid")
  {
    Rng rng(12);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (const Kernel k : {Kernel::gaussian(), Kernel::epanechnikov()})
      for (int t = 0; t < 5; ++t) {
        const double curv = std::pow(10.0, U(rng));
        const double m = 20.0 + 50.0 * (t + 1);
        const double a = poisson_reciprocal_moment(m);
        const double h = amise_optimal_bandwidth(a, m, curv, k);
        const auto grid = log_spaced(h * std::pow(10.0, -1.3), h * std::pow(10.0, 1.7), 40);
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
          vals[i] = amise(grid[i], a, m, curv, k);
        const auto [best, edge] = grid_argmin(vals);
        const double step = std::log(grid[1] / grid[0]);
        CHECK_FALSE(edge);
        CHECK(std::abs(std::log(grid[best] / h)) <= step);
      }
  }

  TEST_CASE("pilot bandwidth")
  {
    BandwidthReport rt{"rt", 0.2, {}, false, {}};
    CHECK(pilot_bandwidth(rt, 1) == 0.2);
    CHECK(pilot_bandwidth(rt, 100) == doctest::Approx(0.76866 * 0.2).epsilon(1e-5));
    double prev = pilot_bandwidth(rt, 1);
    for (std::size_t n = 2; n < 2000; n *= 2) {
      const double b = pilot_bandwidth(rt, n);
      CHECK(b < prev);
      prev = b;
    }
  }

  TEST_CASE("Guan cross-validation score")
  {
    const auto r = testutil::plane_xy(30);
    const auto d = spatial_cdf(r);
    const std::vector<double> z{0.4, 0.7, 1.0, 1.1, 1.5};
    const double h = 0.2;
    const GuanTable t(r, d.grid(), h, Kernel::gaussian());
    const auto est = t.intensity(z, r);
    double sq = 0.0;
    for (double v : est.lambda.values())
      sq += v * v * r.cell_area();
    double loo = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
      for (std::size_t j = 0; j < z.size(); ++j)
        if (i != j)
          loo += gauss((z[i] - z[j]) / h) / h / t.q_at(z[i]);
    CHECK(guan_cv_score(t, z, est, Kernel::gaussian()) == doctest::Approx(sq - 2.0 * loo));
    const auto grid = log_spaced(0.05, 1.0, 12);
    const auto rep = guan_cv_bandwidth(z, r, d.grid(), Kernel::gaussian(), grid);
    CHECK(rep.method == "cv_guan");
    CHECK(rep.curve.size() == 12);
  }
}
