#pragma once

#include "covkern/covariate_transform.hpp"
#include "covkern/geom.hpp"
#include "covkern/kernels.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace covkern {

//! Covariate values at the events with their inverse-g* weights.
struct TransformedSample {
  std::vector<double> z;
  std::vector<double> weights; // 1 / g*(Z_i)

  std::size_t n() const noexcept { return z.size(); }
  bool empty() const noexcept { return z.empty(); }

  //! Builds weights from g*, validating positivity.
  static TransformedSample from_values(std::vector<double> z, const CovariateDistribution& dist);
  //! Events of both samples (rho-hat is additive over this).
  TransformedSample concatenated(const TransformedSample& other) const;
  //! Sample without event i.
  TransformedSample without(std::size_t i) const;
};

//! rho-hat tabulated on the distribution's z grid.
struct RhoEstimate {
  UniformGrid grid;
  std::vector<double> rho_hat;
  double bandwidth;
  Kernel kernel;
  double m_hat; // Simpson \int rho_hat g*

  double at(double z) const { return grid.interpolate(rho_hat, z, std::nan("")); }
};

struct IntensityEstimate {
  RasterCovariate lambda;
  std::string provenance;
  std::size_t clamped_cells = 0; // cells whose Z fell outside the rho grid
};

//! Interpolates Z at every event and attaches 1/g*(Z_i). Throws when an event
//! sits where g* is below the negligible-mass threshold.
TransformedSample transform_sample(const PointPattern& pattern, const RasterCovariate& raster,
                                   const CovariateDistribution& dist);

//! sum_i K_h(z - Z_i) / g*(Z_i).
double rho_hat(const TransformedSample& sample, double h, const Kernel& k, double z);
//! Second derivative in z of rho_hat (gaussian kernels only).
double rho_hat_d2(const TransformedSample& sample, double h, const Kernel& k, double z);
//! g*(z) rho_hat(z) / N, and exactly 0 for N = 0.
double f_hat(const TransformedSample& sample, const CovariateDistribution& dist, double h,
             const Kernel& k, double z);

//! rho_hat on every node of `grid`, truncating the kernel at its effective
//! radius.
std::vector<double> rho_hat_on_grid(const TransformedSample& sample, double h, const Kernel& k,
                                    const UniformGrid& grid);
std::vector<double> rho_hat_d2_on_grid(const TransformedSample& sample, double h,
                                       const Kernel& k, const UniformGrid& grid);
std::vector<double> f_hat_on_grid(const TransformedSample& sample,
                                  const CovariateDistribution& dist, double h, const Kernel& k);

RhoEstimate estimate_rho(const TransformedSample& sample, const CovariateDistribution& dist,
                         double h, const Kernel& k);

//! Plug-in intensity: lambda(u) = rho_hat(Z(u)) per raster cell. Cells outside
//! the rho grid are clamped to the end values and counted.
IntensityEstimate lambda_hat(const RhoEstimate& rho, const RasterCovariate& raster);

//! Kernel intensity through covariate distance, edge-corrected by
//! q_h(u) = \int_W K_h(Z(u) - Z(s)) ds (midpoint rule over raster cells).
double guan_estimate(const PointPattern& pattern, const RasterCovariate& raster, double h,
                     const Kernel& k, Point u);
double guan_edge_correction(const RasterCovariate& raster, double h, const Kernel& k, double zu);

//! Planar isotropic gaussian kernel intensity with edge correction p_H(u).
double diggle_estimate(const PointPattern& pattern, double h_xy, Point u);
//! Mass of the planar gaussian kernel centred at u that falls inside the window.
double diggle_edge_correction(const Window& w, double h_xy, Point u);

//! Tabulated Guan estimator: q_h on the z grid (midpoint over cells, tabulated
//! because q_h depends on u only through Z(u)), reused across samples.
class GuanTable {
public:
  GuanTable(const RasterCovariate& raster, const UniformGrid& grid, double h, const Kernel& k);

  double bandwidth() const noexcept { return h_; }
  std::span<const double> q() const noexcept { return q_; }
  double q_at(double z) const { return grid_.interpolate(q_, z, std::nan("")); }

  //! Numerator sum_i K_h(z - Z_i) on the grid.
  std::vector<double> numerator(std::span<const double> z_events) const;
  //! lambda^G on every raster cell given cell covariate values.
  IntensityEstimate intensity(std::span<const double> z_events, const RasterCovariate& raster) const;

private:
  UniformGrid grid_;
  double h_;
  Kernel k_;
  std::vector<double> q_;
};

//! Pointwise moments of f_hat under a Poisson process with intensity rho g*.
struct EstimatorMoments {
  double mean;
  double variance;
};
//! Exact mean/variance of f_hat(z) for a Poisson process whose transformed
//! intensity is rho g* with total mass m; convolutions by Simpson on `grid`.
EstimatorMoments f_hat_moments(const std::function<double(double)>& rho,
                               const std::function<double(double)>& gstar, const UniformGrid& grid,
                               double m, double h, const Kernel& k, double z);

} // namespace covkern
