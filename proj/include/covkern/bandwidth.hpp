#pragma once

#include "covkern/covariate_transform.hpp"
#include "covkern/estimators.hpp"
#include "covkern/kernels.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace covkern {

struct BandwidthReport {
  std::string method; // silverman, rt, cv, boot, amise_oracle, mise_mc
  double h = 0.0;
  std::map<std::string, double> diagnostics;
  bool boundary_hit = false;
  std::vector<std::pair<double, double>> curve; // (h, criterion) for grid searches
};

//! A(m) = E[1{N != 0} / N] for N ~ Poisson(m), by summing the series
//! outward from its mode.
double poisson_reciprocal_moment(double m);

//! (A R(K) / (mu2^2 (1 - e^-m)^2 R_curv))^(1/5).
double amise_optimal_bandwidth(double a_m, double m, double curvature, const Kernel& k);
//! (1 - e^-m)^2 h^4/4 R_curv mu2^2 + A R(K) / h.
double amise(double h, double a_m, double m, double curvature, const Kernel& k);

//! Simpson integral of psi^2 over the nodes where g* exceeds the
//! negligible-mass threshold.
double curvature_functional(std::span<const double> psi, const CovariateDistribution& dist);

//! Silverman's rule on the raw covariate values at the events.
BandwidthReport silverman(const TransformedSample& sample);

//! Normal-reference rule for the relative density rho g*/m. A(m) is 1/n
//! unless `exact_a` is set, in which case the series value A(n) is used.
BandwidthReport rule_of_thumb(const TransformedSample& sample, const CovariateDistribution& dist,
                              const Kernel& k, bool exact_a = false);

//! Least-squares cross-validation score of f_hat at bandwidth h.
double cv_score(const TransformedSample& sample, const CovariateDistribution& dist,
                const Kernel& k, double h);
//! 40 log-spaced points on [h/10, 10 h].
std::vector<double> default_h_grid(double h_center, std::size_t count = 40, double decades = 2.0);
std::vector<double> log_spaced(double lo, double hi, std::size_t count);
BandwidthReport cv_bandwidth(const TransformedSample& sample, const CovariateDistribution& dist,
                             const Kernel& k, std::span<const double> h_grid);

//! Least-squares cross-validation for Guan's estimator:
//! \int_W lambda^2 - 2 sum_i sum_{j != i} K_h(Z_i - Z_j) / q_h(X_i).
double guan_cv_score(const GuanTable& table, std::span<const double> z_events,
                     const IntensityEstimate& estimate, const Kernel& k);
BandwidthReport guan_cv_bandwidth(std::span<const double> z_events, const RasterCovariate& raster,
                                  const UniformGrid& grid, const Kernel& k,
                                  std::span<const double> h_grid);

//! Infeasible AMISE bandwidth for a known rho: `rho_d2` is rho'' and m the
//! expected count.
BandwidthReport h_amise_oracle(const std::function<double(double)>& rho_d2,
                               const CovariateDistribution& dist, double m, const Kernel& k);

//! Pilot bandwidth n^(-1/5) / n^(-1/7) * h_RT.
double pilot_bandwidth(const BandwidthReport& rt, std::size_t n);

//! Index of the smallest finite value; boundary flag when it is an endpoint.
std::pair<std::size_t, bool> grid_argmin(std::span<const double> values);

} // namespace covkern
