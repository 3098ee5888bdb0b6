#pragma once

#include "covkern/estimators.hpp"
#include "covkern/geom.hpp"
#include "covkern/random.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace covkern {

//! Zero-mean stationary Gaussian field with covariance sigma^2 exp(-r / range_s).
struct GRFSpec {
  double sigma = 0.1;
  double range_s = 0.1;
  std::size_t ncols = 128;
  std::size_t nrows = 128;
  Window window = Window::unit_square();
  std::uint64_t seed = 1;
  double padding = 2.0; // embedding size as a multiple of the grid

  void validate() const;
};

//! Circulant-embedding sampler. The eigenvalues are computed once, so repeated
//! realisations cost two FFT-sized passes each.
class CirculantEmbedding {
public:
  explicit CirculantEmbedding(const GRFSpec& spec);
  ~CirculantEmbedding();
  CirculantEmbedding(const CirculantEmbedding&) = delete;
  CirculantEmbedding& operator=(const CirculantEmbedding&) = delete;

  RasterCovariate sample(Rng& rng) const;
  //! Smallest eigenvalue relative to the largest, before clipping.
  double min_relative_eigenvalue() const noexcept { return min_rel_eig_; }

private:
  GRFSpec spec_;
  std::size_t prow_, pcol_;
  std::vector<double> sqrt_eig_;
  double min_rel_eig_;
  struct Plan;
  std::unique_ptr<Plan> plan_;
};

//! Dense Cholesky sampler for small grids (at most 64x64 cells).
class CholeskyField {
public:
  explicit CholeskyField(const GRFSpec& spec);
  ~CholeskyField();
  RasterCovariate sample(Rng& rng) const;

private:
  GRFSpec spec_;
  struct Factor;
  std::unique_ptr<Factor> factor_;
};

//! One realisation from the spec's seed: circulant embedding, falling back to
//! dense Cholesky on small grids when the embedding is indefinite.
RasterCovariate gaussian_random_field(const GRFSpec& spec);

struct ModelSpec {
  int model_id = 1;
  double beta0 = 6.0;
  double beta1 = 4.0;
  double target_m = 100.0;

  //! Log-linear models of the benchmark study: 1 and 2 use (6, 4), 3 uses (5, -3).
  static ModelSpec standard(int model_id, double target_m);
  void validate() const;
};

//! exp(beta0 + beta1 Z) rescaled so that sum(lambda * cell_area) = target_m.
RasterCovariate model_intensity(const ModelSpec& spec, const RasterCovariate& covariate);
//! Rescaling factor applied by model_intensity.
double intensity_scale(const ModelSpec& spec, const RasterCovariate& covariate);

using Polyline = std::vector<Point>;

//! Distance from every cell centre to the nearest stroke, divided by its maximum.
RasterCovariate distance_field(const std::vector<Polyline>& strokes, const Window& window,
                               std::size_t ncols, std::size_t nrows);
//! Strokes tracing a capital R inside the unit square.
std::vector<Polyline> letter_r_strokes();

//! Everything one benchmark model needs: the covariate the estimators see,
//! the covariate that generated the intensity, and the true intensity.
struct Scenario {
  ModelSpec model;
  RasterCovariate observed;
  RasterCovariate generating;
  RasterCovariate intensity;
  //! True link rho(z) when the intensity is a function of the observed
  //! covariate (models 1 and 3); empty otherwise.
  std::function<double(double)> rho;
};

Scenario build_scenario(const ModelSpec& model, const GRFSpec& grf);

//! Lewis-Shedler thinning against the bilinear intensity surface.
PointPattern simulate_poisson(const RasterCovariate& intensity, Rng& rng);
PointPattern simulate_poisson(const RasterCovariate& intensity, std::uint64_t seed);
//! Thinning for an analytic intensity bounded by lambda_max on the window.
PointPattern simulate_poisson(const std::function<double(Point)>& intensity, double lambda_max,
                              const Window& window, Rng& rng);

//! Midpoint-rule \int_W ((lambda_hat - lambda) / lambda)^2.
double ise_rel(const RasterCovariate& lambda_hat, const RasterCovariate& lambda_true);
double ise_rel(const IntensityEstimate& lambda_hat, const RasterCovariate& lambda_true);

} // namespace covkern
