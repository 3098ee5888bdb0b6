#include "covkern/error.hpp"
#include "covkern/parallel.hpp"
#include "covkern/quadrature.hpp"
#include "covkern/random.hpp"
#include "covkern/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace covkern;

TEST_SUITE("quadrature")
{
  TEST_CASE("uniform grid nodes and interpolation")
  {
    UniformGrid g(0.0, 1.0, 11);
    CHECK(g.step() == doctest::Approx(0.1));
    CHECK(g[10] == doctest::Approx(1.0));
    std::vector<double> v(11);
    for (std::size_t i = 0; i < 11; ++i)
      v[i] = 3.0 * g[i] - 1.0;
    CHECK(g.interpolate(v, 0.537, 0.0) == doctest::Approx(3.0 * 0.537 - 1.0));
    CHECK(g.interpolate(v, 2.0, 0.0) == 0.0);
    CHECK(g.interpolate(v, 2.0, std::nan("")) == doctest::Approx(2.0));
    CHECK(g.interpolate(v, -1.0, std::nan("")) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(UniformGrid(0.0, 1.0, 1), ParameterError);
  }

  TEST_CASE("simpson integrates cubics exactly")
  {
    UniformGrid g(-1.0, 2.0, 31);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      v[i] = std::pow(g[i], 3) - 2.0 * g[i] * g[i] + 0.5;
    // antiderivative x^4/4 - 2x^3/3 + x/2
    auto F = [](double x) { return std::pow(x, 4) / 4 - 2 * std::pow(x, 3) / 3 + x / 2; };
    CHECK(simpson(v, g.step()) == doctest::Approx(F(2.0) - F(-1.0)).epsilon(1e-13));
  }

  TEST_CASE("simpson with an odd panel count converges")
  {
    UniformGrid g(0.0, std::numbers::pi, 1000);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      v[i] = std::sin(g[i]);
    CHECK(simpson(v, g.step()) == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("cumulative trapezoid")
  {
    std::vector<double> v{1.0, 1.0, 1.0, 1.0};
    const auto c = cumulative_trapezoid(v, 0.5);
    REQUIRE(c.size() == 4);
    CHECK(c[0] == 0.0);
    CHECK(c[3] == doctest::Approx(1.5));
  }

  TEST_CASE("compensated sum recovers small terms")
  {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i)
      s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1000.0);
  }

  TEST_CASE("stats")
  {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(stats::mean(x) == 5.5);
    CHECK(stats::sd(x) == doctest::Approx(3.0276503540974917));
    CHECK(stats::quantile(x, 0.25) == doctest::Approx(3.25));
    CHECK(stats::quantile(x, 0.75) == doctest::Approx(7.75));
    CHECK(stats::iqr(x) == doctest::Approx(4.5));
    const double expect = 0.9 * std::min(3.0276503540974917, 4.5 / 1.34) * std::pow(10.0, -0.2);
    CHECK(stats::silverman_rule(x) == doctest::Approx(expect));
    CHECK_THROWS(stats::silverman_rule(std::vector<double>{1.0}));
    CHECK_THROWS(stats::silverman_rule(std::vector<double>{2.0, 2.0, 2.0}));
  }

  TEST_CASE("substreams are reproducible and key-order sensitive")
  {
    auto a = substream(7, {1, 2});
    auto b = substream(7, {1, 2});
    auto c = substream(7, {2, 1});
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
    CHECK(mix64(0) != mix64(1));
  }

  TEST_CASE("parallel_for visits each index once and rethrows")
  {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits)
      REQUIRE(h == 1);
    CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
      if (i == 5)
        throw NumericError("x");
    }));
  }
}
