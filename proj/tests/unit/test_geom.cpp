#include "covkern/error.hpp"
#include "covkern/geom.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace covkern;

TEST_SUITE("geom")
{
  TEST_CASE("window invariants")
  {
    Window w(0.0, 2.0, -1.0, 1.0);
    CHECK(w.area() == doctest::Approx(4.0));
    CHECK(w.contains({2.0, 1.0}));
    CHECK_FALSE(w.contains({2.0000001, 0.0}));
    CHECK_THROWS_AS(Window(1.0, 1.0, 0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(Window(0.0, 1.0, 2.0, 1.0), ParameterError);
  }

  TEST_CASE("raster geometry and validation")
  {
    RasterCovariate r(Window::unit_square(), 2, 2, {1, 2, 3, 4});
    CHECK(r.cell_width() == 0.5);
    CHECK(r.cell_height() == 0.5);
    const Point top_left = r.cell_center(0, 0);
    CHECK(top_left.x == 0.25);
    CHECK(top_left.y == 0.75);
    CHECK_THROWS_AS(RasterCovariate(Window::unit_square(), 2, 2, {1, 2, 3}), ParameterError);
    CHECK_THROWS_AS(RasterCovariate(Window::unit_square(), 2, 1, {1, std::nan("")}),
                    ParameterError);
  }

  TEST_CASE("load_raster: 2x2 grid")
  {
    std::istringstream in("ncols 2\nnrows 2\nxmin 0\nymin 0\nxmax 1\nymax 1\n1 2\n3 4\n");
    const auto r = parse_raster(in);
    CHECK(r.ncols() == 2);
    CHECK(r.cell_width() == 0.5);
    CHECK(r.at(0, 0) == 1.0);
    CHECK(r.at(1, 1) == 4.0);
  }

  TEST_CASE("load_raster: malformed input names the line")
  {
    auto line_of = [](const std::string& text) {
      std::istringstream in(text);
      try {
        parse_raster(in);
      } catch (const ParseError& e) {
        return e.line();
      }
      return -1L;
    };
    CHECK(line_of("ncols 0\nnrows 2\nxmin 0\nymin 0\nxmax 1\nymax 1\n") == 1);
    CHECK(line_of("ncols 2\nnrows 2\nxmin 0\nymin 0\nxmax 1\nymax 1\n1 2\n3\n") == 8);
    CHECK(line_of("ncols 2\nnrows 2\nxmin 0\nymin 0\nxmax 1\nymax 1\n1 x\n3 4\n") == 7);
    CHECK(line_of("ncols 2\nnrows 2\nxmin 0\nymin 0\nxmax 1\nymax 1\n1 2\n3 nan\n") == 8);
    CHECK(line_of("ncols 2\nnrows 2\nxmin 0\nymin 0\nxmax 1\nymax 1\n1 2\n") > 0);
    CHECK(line_of("nrows 2\nncols 2\nxmin 0\nymin 0\nxmax 1\nymax 1\n1 2\n3 4\n") == 1);
  }

  TEST_CASE("load_raster: 100x100 round trip at 9 significant digits")
  {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 3.0);
    std::vector<double> v(100 * 100);
    for (double& x : v)
      x = nd(rng);
    const RasterCovariate r(Window(0, 2, 0, 3), 100, 100, v);
    const auto dir = testutil::scratch_dir("geom_roundtrip");
    save_raster(r, dir / "a.asc", 9);
    const auto back = load_raster(dir / "a.asc");
    save_raster(back, dir / "b.asc", 9);
    std::ifstream fa(dir / "a.asc"), fb(dir / "b.asc");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(back.window() == r.window());
    for (std::size_t i = 0; i < v.size(); ++i)
      REQUIRE(back.values()[i] == doctest::Approx(v[i]).epsilon(1e-8));
  }

  TEST_CASE("load_raster: full precision round trip is exact")
  {
    const auto r = testutil::plane_xy(7);
    std::stringstream ss;
    write_raster(r, ss);
    const auto back = parse_raster(ss);
    for (std::size_t i = 0; i < r.size(); ++i)
      CHECK(back.values()[i] == r.values()[i]);
  }

  TEST_CASE("load_pattern")
  {
    const Window w = Window::unit_square();
    {
      std::istringstream in("x,y\n0.5,0.5\n0.1,0.9\n");
      const auto p = parse_pattern(in, w);
      REQUIRE(p.size() == 2);
      CHECK(p.points()[1].y == 0.9);
    }
    {
      std::istringstream in("x,y\n");
      CHECK(parse_pattern(in, w).empty());
    }
    {
      std::istringstream in("x,y\n0.5,0.5\n1.5,0.5\n");
      CHECK_THROWS_AS(parse_pattern(in, w), DomainError);
    }
    {
      std::istringstream in("0.5,0.5\n");
      CHECK_THROWS_AS(parse_pattern(in, w), ParseError);
    }
    {
      std::istringstream in("x,y\nnan,0.5\n");
      CHECK_THROWS_AS(parse_pattern(in, w), ParseError);
    }
    {
      std::istringstream in("x,y\n1,1\n0,0\n");
      CHECK(parse_pattern(in, w).size() == 2);
    }
  }

  TEST_CASE("pattern round trip")
  {
    PointPattern p(Window::unit_square(), {{0.1, 0.2}, {1.0 / 3.0, 0.7}});
    std::stringstream ss;
    write_pattern(p, ss);
    const auto back = parse_pattern(ss, p.window());
    CHECK(back.points()[1].x == p.points()[1].x);
  }

  TEST_CASE("pattern z cache length is checked")
  {
    PointPattern p(Window::unit_square(), {{0.1, 0.2}});
    CHECK_THROWS_AS(p.set_z_values({1.0, 2.0}), ParameterError);
    p.set_z_values({3.0});
    CHECK(p.z_values()->front() == 3.0);
  }

  TEST_CASE("eval_covariate")
  {
    RasterCovariate r(Window::unit_square(), 2, 2, {1, 3, 5, 7});
    CHECK(eval_covariate(r, r.cell_center(1, 0)) == 5.0);
    CHECK(eval_covariate(r, {0.5, 0.75}) == doctest::Approx(2.0));
    // Half-cell margin is constant.
    CHECK(eval_covariate(r, {0.0, 1.0}) == 1.0);
    CHECK(eval_covariate(r, {0.1, 0.75}) == 1.0);
    CHECK_THROWS_AS(eval_covariate(r, {1.1, 0.5}), DomainError);
  }

  TEST_CASE("eval_covariate reproduces affine functions")
  {
    const Window w(-1.0, 3.0, 0.0, 2.0);
    auto f = [](Point p) { return 0.7 * p.x - 2.5 * p.y + 1.25; };
    const auto r = RasterCovariate::sample(w, 37, 23, f);
    const auto xy = testutil::plane_xy(50);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
      // interior: between the outermost cell centres
      std::uniform_real_distribution<double> ux(w.xmin() + r.cell_width() / 2,
                                                w.xmax() - r.cell_width() / 2);
      std::uniform_real_distribution<double> uy(w.ymin() + r.cell_height() / 2,
                                                w.ymax() - r.cell_height() / 2);
      const Point p{ux(rng), uy(rng)};
      REQUIRE(std::abs(eval_covariate(r, p) - f(p)) < 1e-12);
      std::uniform_real_distribution<double> u01(0.01, 0.99);
      const Point q{u01(rng), u01(rng)};
      REQUIRE(std::abs(eval_covariate(xy, q) - (q.x + q.y)) < 1e-12);
    }
  }
}
