#pragma once

#include "covkern/geom.hpp"
#include "covkern/quadrature.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace covkern {

//! The covariate-space measure induced by a raster: g*(z) is the window area
//! per unit covariate value at level z, G*(z) the area where Z <= z.
//! Tabulated on a uniform z grid; immutable.
class CovariateDistribution {
public:
  //! Builds from a tabulated g*; G* is its running integral. Used for
  //! analytic covariates where g* is known exactly.
  static CovariateDistribution from_density(UniformGrid grid, std::vector<double> g_star,
                                            double area, double smoothing_bandwidth = 0.0);

  CovariateDistribution(UniformGrid grid, std::vector<double> g_star,
                        std::vector<double> G_star, double area, double smoothing_bandwidth);

  const UniformGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  double z_min() const noexcept { return grid_.lo(); }
  double z_max() const noexcept { return grid_.hi(); }
  double z_range() const noexcept { return grid_.hi() - grid_.lo(); }
  double area() const noexcept { return area_; }
  double smoothing_bandwidth() const noexcept { return smoothing_bandwidth_; }

  std::span<const double> g_star() const noexcept { return g_star_; }
  std::span<const double> G_star() const noexcept { return G_star_; }
  //! Central finite-difference derivatives of g* on the grid.
  std::span<const double> g_star_d1() const noexcept { return d1_; }
  std::span<const double> g_star_d2() const noexcept { return d2_; }

  double max_g_star() const noexcept { return max_g_; }
  //! Threshold below which covariate mass is treated as negligible.
  double negligible_mass() const noexcept { return 1e-6 * max_g_; }

  //! Same grid and area, g* multiplied by c > 0.
  CovariateDistribution scaled(double c) const;

private:
  UniformGrid grid_;
  std::vector<double> g_star_, G_star_, d1_, d2_;
  double area_;
  double smoothing_bandwidth_;
  double max_g_;
};

//! Area-weighted Gaussian smoothing of the raster's cell values (Silverman
//! bandwidth unless overridden), rescaled so that g* integrates to |W|, on a
//! grid padded by three smoothing bandwidths.
CovariateDistribution spatial_cdf(const RasterCovariate& raster, std::size_t n_z = 513,
                                  std::optional<double> smoothing_bandwidth = std::nullopt);

//! Linear interpolation of g*; zero outside the grid.
double gstar_at(const CovariateDistribution& dist, double z);

//! Simpson integral of rho * g* over the grid. Throws on negative rho.
double expected_count(const std::function<double(double)>& rho, const CovariateDistribution& dist);
double expected_count(std::span<const double> rho_on_grid, const CovariateDistribution& dist);

} // namespace covkern
