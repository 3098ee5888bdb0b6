#include "covkern/covariate_transform.hpp"

#include "covkern/error.hpp"
#include "covkern/kernels.hpp"
#include "covkern/stats.hpp"

#include <algorithm>
#include <cmath>

namespace covkern {

namespace {

void finite_differences(std::span<const double> g, double dz, std::vector<double>& d1,
                        std::vector<double>& d2)
{
  const std::size_t n = g.size();
  d1.assign(n, 0.0);
  d2.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d1[i] = (g[i + 1] - g[i - 1]) / (2.0 * dz);
    d2[i] = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (dz * dz);
  }
  d1[0] = (g[1] - g[0]) / dz;
  d1[n - 1] = (g[n - 1] - g[n - 2]) / dz;
  if (n >= 3) {
    d2[0] = d2[1];
    d2[n - 1] = d2[n - 2];
  }
}

} // namespace

CovariateDistribution::CovariateDistribution(UniformGrid grid, std::vector<double> g_star,
                                             std::vector<double> G_star, double area,
                                             double smoothing_bandwidth)
  : grid_(grid)
  , g_star_(std::move(g_star))
  , G_star_(std::move(G_star))
  , area_(area)
  , smoothing_bandwidth_(smoothing_bandwidth)
{
  if (g_star_.size() != grid_.size() || G_star_.size() != grid_.size())
    throw ParameterError("g*/G* tables must match the z grid");
  if (!(area > 0.0))
    throw ParameterError("window area must be positive");
  for (double g : g_star_)
    if (!(g >= 0.0) || !std::isfinite(g))
      throw ParameterError("g* must be finite and non-negative");
  max_g_ = *std::max_element(g_star_.begin(), g_star_.end());
  if (!(max_g_ > 0.0))
    throw NumericError("g* vanishes on the whole grid");
  finite_differences(g_star_, grid_.step(), d1_, d2_);
}

CovariateDistribution CovariateDistribution::from_density(UniformGrid grid,
                                                          std::vector<double> g_star, double area,
                                                          double smoothing_bandwidth)
{
  auto G = cumulative_trapezoid(g_star, grid.step());
  return CovariateDistribution(grid, std::move(g_star), std::move(G), area, smoothing_bandwidth);
}

CovariateDistribution CovariateDistribution::scaled(double c) const
{
  if (!(c > 0.0))
    throw ParameterError("scale factor must be positive");
  std::vector<double> g(g_star_), G(G_star_);
  for (double& v : g)
    v *= c;
  for (double& v : G)
    v *= c;
  return CovariateDistribution(grid_, std::move(g), std::move(G), area_, smoothing_bandwidth_);
}

CovariateDistribution spatial_cdf(const RasterCovariate& raster, std::size_t n_z,
                                  std::optional<double> smoothing_bandwidth)
{
  if (n_z < 64)
    throw ParameterError("n_z must be at least 64");
  std::vector<double> z(raster.values().begin(), raster.values().end());
  std::sort(z.begin(), z.end());
  if (!(z.back() > z.front()))
    throw NumericError("covariate has zero gradient");

  double s;
  if (smoothing_bandwidth) {
    s = *smoothing_bandwidth;
    if (!(s > 0.0))
      throw ParameterError("g* smoothing bandwidth must be positive");
  } else {
    s = stats::silverman_rule(z);
  }

  const UniformGrid grid(z.front() - 3.0 * s, z.back() + 3.0 * s, n_z);
  const double cell = raster.cell_area();
  const double area = raster.window().area();
  const Kernel k = Kernel::gaussian();
  const double radius = k.effective_radius(s);

  std::vector<double> g(n_z), G(n_z);
  for (std::size_t j = 0; j < n_z; ++j) {
    const double zj = grid[j];
    auto lo = std::lower_bound(z.begin(), z.end(), zj - radius);
    auto hi = std::upper_bound(z.begin(), z.end(), zj + radius);
    CompensatedSum acc;
    for (auto it = lo; it != hi; ++it)
      acc.add(k((zj - *it) / s));
    g[j] = acc.value() * cell / s;
    G[j] = cell * static_cast<double>(std::upper_bound(z.begin(), z.end(), zj) - z.begin());
  }
  G.back() = area;

  const double mass = simpson(g, grid.step());
  for (double& v : g)
    v *= area / mass;
  return CovariateDistribution(grid, std::move(g), std::move(G), area, s);
}

double gstar_at(const CovariateDistribution& dist, double z)
{
  return dist.grid().interpolate(dist.g_star(), z, 0.0);
}

double expected_count(const std::function<double(double)>& rho, const CovariateDistribution& dist)
{
  std::vector<double> r(dist.size());
  for (std::size_t j = 0; j < r.size(); ++j)
    r[j] = rho(dist.grid()[j]);
  return expected_count(r, dist);
}

double expected_count(std::span<const double> rho_on_grid, const CovariateDistribution& dist)
{
  if (rho_on_grid.size() != dist.size())
    throw ParameterError("rho table does not match the z grid");
  std::vector<double> y(dist.size());
  const auto g = dist.g_star();
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double r = rho_on_grid[j];
    if (!std::isfinite(r))
      throw NumericError("rho is not finite on the z grid");
    if (r < 0.0)
      throw DomainError("intensity function rho must be non-negative");
    y[j] = r * g[j];
  }
  return simpson(y, dist.grid().step());
}

} // namespace covkern
