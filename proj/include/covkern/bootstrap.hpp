#pragma once

#include "covkern/bandwidth.hpp"
#include "covkern/covariate_transform.hpp"
#include "covkern/estimators.hpp"
#include "covkern/kernels.hpp"
#include "covkern/random.hpp"

#include <cstdint>
#include <vector>

namespace covkern {

//! Bootstrap distribution built from a pilot-smoothed rho-hat: resamples have
//! N* ~ Poisson(m_hat) events drawn i.i.d. from f~_b = rho_b g* / m_hat.
struct BootstrapWorld {
  double pilot_b = 0.0;
  Kernel kernel;
  CovariateDistribution dist;
  RhoEstimate rho_b;
  double m_hat = 0.0;
  std::vector<double> f_tilde;  // normalised on the z grid
  std::vector<double> cdf;      // running integral of f_tilde, ends at 1
  std::vector<double> psi;      // rho_b'' g* / m_hat
  std::uint64_t rng_seed = 0;

  const UniformGrid& grid() const noexcept { return dist.grid(); }
};

BootstrapWorld build_world(const TransformedSample& sample, const CovariateDistribution& dist,
                           double b, const Kernel& k, std::uint64_t seed);

//! One bootstrap sample drawn from `rng`.
TransformedSample resample(const BootstrapWorld& world, Rng& rng);
//! Replicate `index` of the world's reproducible substream family.
TransformedSample resample(const BootstrapWorld& world, std::uint64_t index);

//! Closed-form MISE* expansion at bandwidth h.
double mise_star_closed_form(const BootstrapWorld& world, double h);
//! Leading terms only: h^4/4 R(psi) mu2^2 (1-e^-m)^2 + A(m) R(K)/h.
double amise_star(const BootstrapWorld& world, double h);

struct MonteCarloEstimate {
  double estimate;
  double standard_error;
};
//! Average over B resamples of the Simpson ISE between f_hat*_h and f~_b.
MonteCarloEstimate mise_star_monte_carlo(const BootstrapWorld& world, double h, std::size_t B,
                                         unsigned threads = 1);

//! Exact bootstrap mean and variance of f_hat*_h(z).
EstimatorMoments bootstrap_moments(const BootstrapWorld& world, double h, double z);

//! Plug-in bootstrap bandwidth: rule-of-thumb -> pilot -> world -> AMISE* minimiser.
BandwidthReport h_boot(const TransformedSample& sample, const CovariateDistribution& dist,
                       const Kernel& k);
//! Same, starting from an explicit pilot bandwidth.
BandwidthReport h_boot_with_pilot(const TransformedSample& sample,
                                  const CovariateDistribution& dist, const Kernel& k, double b);

} // namespace covkern
