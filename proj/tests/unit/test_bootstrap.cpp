#include "covkern/bootstrap.hpp"
#include "covkern/error.hpp"
#include "covkern/stats.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace covkern;

namespace {

// g* is a N(0, s^2) density and rho = c exp(4z), so the relative density is
// N(4 s^2, s^2) and rho'' = 16 rho.
struct NormalWorld {
  double s = 0.1;
  CovariateDistribution dist;

  NormalWorld()
    : dist([this] {
      UniformGrid g(-0.8, 0.8, 1601);
      std::vector<double> gs(g.size());
      for (std::size_t j = 0; j < gs.size(); ++j) {
        const double u = g[j] / s;
        gs[j] = std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * std::numbers::pi));
      }
      return CovariateDistribution::from_density(g, gs, 1.0);
    }())
  {}

  double mu() const { return 4.0 * s * s; }

  TransformedSample draw(double m, Rng& rng) const
  {
    std::poisson_distribution<long> P(m);
    std::normal_distribution<double> N(mu(), s);
    std::vector<double> z(static_cast<std::size_t>(P(rng)));
    for (double& v : z)
      do
        v = N(rng);
      while (std::abs(v - mu()) > 4.0 * s);
    return TransformedSample::from_values(std::move(z), dist);
  }

  double oracle(double m) const
  {
    const double c = m / std::exp(8.0 * s * s);
    return h_amise_oracle([c](double z) { return 16.0 * c * std::exp(4.0 * z); }, dist, m,
                          Kernel::gaussian())
      .h;
  }
};

const NormalWorld& normal_world()
{
  static const NormalWorld w;
  return w;
}

TransformedSample fixed_sample(std::size_t n, std::uint64_t seed)
{
  const auto& w = normal_world();
  Rng rng(seed);
  std::normal_distribution<double> N(w.mu(), w.s);
  std::vector<double> z(n);
  for (double& v : z)
    do
      v = N(rng);
    while (std::abs(v - w.mu()) > 4.0 * w.s);
  return TransformedSample::from_values(std::move(z), w.dist);
}

} // namespace

TEST_SUITE("bootstrap")
{
  TEST_CASE("world normalisation")
  {
    const auto& nw = normal_world();
    const auto s = fixed_sample(80, 1);
    const auto w = build_world(s, nw.dist, 0.05, Kernel::gaussian(), 7);
    CHECK(std::abs(simpson(w.f_tilde, w.grid().step()) - 1.0) < 1e-6);
    CHECK(std::is_sorted(w.cdf.begin(), w.cdf.end()));
    CHECK(w.cdf.back() == 1.0);
    CHECK(w.m_hat > 0.0);
    CHECK_THROWS_AS(build_world(s, nw.dist, 0.0, Kernel::gaussian(), 7), ParameterError);
    CHECK_THROWS_AS(build_world(TransformedSample{}, nw.dist, 0.1, Kernel::gaussian(), 7),
                    ParameterError);
  }

  TEST_CASE("small pilot conserves mass")
  {
    const auto& nw = normal_world();
    const auto s = fixed_sample(150, 2);
    const auto w = build_world(s, nw.dist, 0.02 * nw.dist.z_range(), Kernel::gaussian(), 1);
    CHECK(std::abs(w.m_hat - 150.0) / 150.0 < 0.05);
  }

  TEST_CASE("determinism")
  {
    const auto& nw = normal_world();
    const auto s = fixed_sample(60, 3);
    const auto a = build_world(s, nw.dist, 0.04, Kernel::gaussian(), 99);
    const auto b = build_world(s, nw.dist, 0.04, Kernel::gaussian(), 99);
    CHECK(a.f_tilde == b.f_tilde);
    CHECK(resample(a, 5).z == resample(b, 5).z);
    CHECK(resample(a, 5).z != resample(a, 6).z);
    const auto m1 = mise_star_monte_carlo(a, 0.05, 2);
    const auto m2 = mise_star_monte_carlo(b, 0.05, 2, 2);
    CHECK(m1.estimate == m2.estimate);
    CHECK(m1.standard_error == m2.standard_error);
    CHECK(h_boot(s, nw.dist, Kernel::gaussian()).h == h_boot(s, nw.dist, Kernel::gaussian()).h);
  }

  TEST_CASE("resample counts are Poisson with mean m_hat")
  {
    const auto& nw = normal_world();
    const auto w = build_world(fixed_sample(40, 4), nw.dist, 0.05, Kernel::gaussian(), 11);
    const int B = 10000;
    double sum = 0.0;
    for (int b = 0; b < B; ++b)
      sum += double(resample(w, std::uint64_t(b)).n());
    const double se = std::sqrt(w.m_hat / B);
    CHECK(std::abs(sum / B - w.m_hat) < 3.0 * se);
  }

  TEST_CASE("resampled values follow f_tilde")
  {
    const auto& nw = normal_world();
    const auto w = build_world(fixed_sample(100, 5), nw.dist, 0.04, Kernel::gaussian(), 12);
    std::vector<double> z;
    Rng rng(13);
    while (z.size() < 100000) {
      const auto s = resample(w, rng);
      z.insert(z.end(), s.z.begin(), s.z.end());
    }
    z.resize(100000);
    std::sort(z.begin(), z.end());
    double ks = 0.0;
    const double n = double(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double F = w.grid().interpolate(w.cdf, z[i], std::nan(""));
      ks = std::max({ks, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
    }
    CHECK(ks < 0.01);
    for (std::size_t i = 0; i < 50; ++i) {
      const auto s = resample(w, std::uint64_t(i));
      for (std::size_t j = 0; j < s.n(); ++j)
        REQUIRE(s.weights[j] == doctest::Approx(1.0 / gstar_at(w.dist, s.z[j])));
    }
  }

  TEST_CASE("a spike world stays near its event")
  {
    const auto& nw = normal_world();
    const auto s = TransformedSample::from_values({0.1}, nw.dist);
    const double b = 0.005;
    const auto w = build_world(s, nw.dist, b, Kernel::gaussian(), 3);
    for (std::uint64_t r = 0; r < 200; ++r)
      for (double z : resample(w, r).z)
        REQUIRE(std::abs(z - 0.1) <= 4.0 * b);
  }

  TEST_CASE("closed form reduces to AMISE* for large m")
  {
    const auto& nw = normal_world();
    const auto w = build_world(fixed_sample(200, 6), nw.dist, 0.04, Kernel::gaussian(), 1);
    REQUIRE(w.m_hat > 150.0);
    for (double h : {0.01, 0.03, 0.1}) {
      const double a = amise_star(w, h);
      CHECK(std::abs(mise_star_closed_form(w, h) - a) <= 1e-10 * a);
    }
  }

  TEST_CASE("closed form is U-shaped and matches Monte Carlo")
  {
    const auto& nw = normal_world();
    const auto w = build_world(fixed_sample(100, 7), nw.dist, 0.04, Kernel::gaussian(), 21);
    const auto grid = log_spaced(1e-3, 1.0, 60);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      v[i] = mise_star_closed_form(w, grid[i]);
    const auto [best, edge] = grid_argmin(v);
    CHECK_FALSE(edge);
    for (std::size_t i = 1; i <= best; ++i)
      CHECK(v[i] < v[i - 1]);
    for (std::size_t i = best + 1; i < v.size(); ++i)
      CHECK(v[i] > v[i - 1]);

    const double h = grid[best];
    const auto mc = mise_star_monte_carlo(w, h, 500);
    CHECK(mc.estimate == doctest::Approx(v[best]).epsilon(0.15));
    const auto wide = mise_star_monte_carlo(w, 4.0 * h, 500);
    CHECK(mc.estimate < wide.estimate);
  }

  TEST_CASE("bootstrap bandwidth minimises AMISE* on a log grid")
  {
    const auto& nw = normal_world();
    const auto s = fixed_sample(120, 8);
    const auto rep = h_boot(s, nw.dist, Kernel::gaussian());
    const double b = rep.diagnostics.at("pilot_b");
    CHECK(b == doctest::Approx(std::pow(120.0, -2.0 / 35.0) * rep.diagnostics.at("h_rt")));
    const auto w = build_world(s, nw.dist, b, Kernel::gaussian(), 0);
    const auto grid = log_spaced(rep.h / std::pow(10.0, 1.4), rep.h * std::pow(10.0, 1.6), 40);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      v[i] = amise_star(w, grid[i]);
    const auto [best, edge] = grid_argmin(v);
    CHECK_FALSE(edge);
    CHECK(std::abs(std::log(grid[best] / rep.h)) <= std::log(grid[1] / grid[0]));
  }

  TEST_CASE("bootstrap moments agree with resampling")
  {
    const auto& nw = normal_world();
    const auto w = build_world(fixed_sample(60, 9), nw.dist, 0.05, Kernel::gaussian(), 31);
    const double h = 0.04, z = 0.05;
    const int B = 4000;
    std::vector<double> v(B);
    for (int b = 0; b < B; ++b)
      v[std::size_t(b)] = f_hat(resample(w, std::uint64_t(b)), w.dist, h, w.kernel, z);
    const auto mom = bootstrap_moments(w, h, z);
    const double sd = stats::sd(v);
    CHECK(std::abs(stats::mean(v) - mom.mean) < 3.0 * sd / std::sqrt(double(B)));
    CHECK(sd * sd == doctest::Approx(mom.variance).epsilon(0.1));
  }

  TEST_CASE("bootstrap bandwidth error shrinks from n = 100 to n = 1000")
  {
    const auto& nw = normal_world();
    std::vector<double> medians;
    for (double m : {100.0, 1000.0}) {
      const double oracle = nw.oracle(m);
      std::vector<double> err;
      for (std::uint64_t r = 0; r < 50; ++r) {
        Rng rng = substream(5, {std::uint64_t(m), r});
        const auto s = nw.draw(m, rng);
        err.push_back(std::abs(h_boot(s, nw.dist, Kernel::gaussian()).h - oracle) / oracle);
      }
      medians.push_back(stats::quantile(err, 0.5));
    }
    CAPTURE(medians[0]);
    CAPTURE(medians[1]);
    CHECK(medians[1] < medians[0]);
  }
}
