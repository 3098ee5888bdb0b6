#pragma once

#include "covkern/covariate_transform.hpp"
#include "covkern/geom.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testutil {

inline covkern::RasterCovariate plane_x(std::size_t n = 200)
{
  return covkern::RasterCovariate::sample(covkern::Window::unit_square(), n, n,
                                          [](covkern::Point p) { return p.x; });
}

inline covkern::RasterCovariate plane_xy(std::size_t n = 200)
{
  return covkern::RasterCovariate::sample(covkern::Window::unit_square(), n, n,
                                          [](covkern::Point p) { return p.x + p.y; });
}

//! g* identically 1 on [lo, hi]: the exact measure of Z(u) = x on the strip
//! [lo, hi] x [0, 1].
inline covkern::CovariateDistribution uniform_dist(double lo, double hi, std::size_t n = 2001)
{
  covkern::UniformGrid grid(lo, hi, n);
  return covkern::CovariateDistribution::from_density(grid, std::vector<double>(n, 1.0), hi - lo);
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / ("covkern_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace testutil
