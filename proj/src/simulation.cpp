#include "covkern/simulation.hpp"

#include "covkern/error.hpp"
#include "covkern/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace covkern {

namespace {
// The FFTW planner is not thread-safe; execution with new arrays is.
std::mutex fftw_planner_mutex;
} // namespace

void GRFSpec::validate() const
{
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ParameterError("GRF sigma must be positive");
  if (!(range_s > 0.0) || !std::isfinite(range_s))
    throw ParameterError("GRF range must be positive");
  if (ncols == 0 || nrows == 0)
    throw ParameterError("GRF grid must be non-empty");
  if (ncols > 512 || nrows > 512)
    throw ParameterError("GRF grid is limited to 512 x 512");
  if (!(padding >= 1.0))
    throw ParameterError("embedding padding must be at least 1");
}

struct CirculantEmbedding::Plan {
  fftw_plan plan = nullptr;
  ~Plan()
  {
    std::lock_guard lock(fftw_planner_mutex);
    if (plan)
      fftw_destroy_plan(plan);
  }
};

CirculantEmbedding::CirculantEmbedding(const GRFSpec& spec)
  : spec_(spec), plan_(std::make_unique<Plan>())
{
  spec.validate();
  auto even_at_least = [](double v) {
    auto n = static_cast<std::size_t>(std::ceil(v));
    return n + n % 2;
  };
  prow_ = even_at_least(spec.padding * static_cast<double>(spec.nrows));
  pcol_ = even_at_least(spec.padding * static_cast<double>(spec.ncols));
  const double dx = spec.window.width() / static_cast<double>(spec.ncols);
  const double dy = spec.window.height() / static_cast<double>(spec.nrows);
  const std::size_t total = prow_ * pcol_;

  fftw_complex* buf = fftw_alloc_complex(total);
  {
    std::lock_guard lock(fftw_planner_mutex);
    plan_->plan = fftw_plan_dft_2d(static_cast<int>(prow_), static_cast<int>(pcol_), buf, buf,
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  }
  const double var = spec.sigma * spec.sigma;
  for (std::size_t r = 0; r < prow_; ++r) {
    const double ly = static_cast<double>(std::min(r, prow_ - r)) * dy;
    for (std::size_t c = 0; c < pcol_; ++c) {
      const double lx = static_cast<double>(std::min(c, pcol_ - c)) * dx;
      buf[r * pcol_ + c][0] = var * std::exp(-std::hypot(lx, ly) / spec.range_s);
      buf[r * pcol_ + c][1] = 0.0;
    }
  }
  fftw_execute_dft(plan_->plan, buf, buf);

  double max_eig = 0.0, min_eig = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    max_eig = std::max(max_eig, buf[i][0]);
    min_eig = std::min(min_eig, buf[i][0]);
  }
  min_rel_eig_ = min_eig / max_eig;
  fftw_free(buf);
  if (min_rel_eig_ < -1e-8) {
    throw NumericError("circulant embedding is not positive semidefinite (relative eigenvalue " +
                       std::to_string(min_rel_eig_) + "); increase the padding factor");
  }
  // Recompute into the kept table; clipping the round-off negatives.
  buf = fftw_alloc_complex(total);
  for (std::size_t r = 0; r < prow_; ++r) {
    const double ly = static_cast<double>(std::min(r, prow_ - r)) * dy;
    for (std::size_t c = 0; c < pcol_; ++c) {
      const double lx = static_cast<double>(std::min(c, pcol_ - c)) * dx;
      buf[r * pcol_ + c][0] = var * std::exp(-std::hypot(lx, ly) / spec.range_s);
      buf[r * pcol_ + c][1] = 0.0;
    }
  }
  fftw_execute_dft(plan_->plan, buf, buf);
  sqrt_eig_.resize(total);
  for (std::size_t i = 0; i < total; ++i)
    sqrt_eig_[i] = std::sqrt(std::max(buf[i][0], 0.0) / static_cast<double>(total));
  fftw_free(buf);
}

CirculantEmbedding::~CirculantEmbedding() = default;

RasterCovariate CirculantEmbedding::sample(Rng& rng) const
{
  const std::size_t total = prow_ * pcol_;
  std::normal_distribution<double> normal(0.0, 1.0);
  fftw_complex* buf = fftw_alloc_complex(total);
  for (std::size_t i = 0; i < total; ++i) {
    const double a = normal(rng);
    const double b = normal(rng);
    buf[i][0] = sqrt_eig_[i] * a;
    buf[i][1] = sqrt_eig_[i] * b;
  }
  fftw_execute_dft(plan_->plan, buf, buf);
  std::vector<double> v(spec_.ncols * spec_.nrows);
  for (std::size_t r = 0; r < spec_.nrows; ++r)
    for (std::size_t c = 0; c < spec_.ncols; ++c)
      v[r * spec_.ncols + c] = buf[r * pcol_ + c][0];
  fftw_free(buf);
  return RasterCovariate(spec_.window, spec_.ncols, spec_.nrows, std::move(v));
}

struct CholeskyField::Factor {
  Eigen::MatrixXd lower;
};

CholeskyField::CholeskyField(const GRFSpec& spec) : spec_(spec), factor_(std::make_unique<Factor>())
{
  spec.validate();
  const std::size_t n = spec.ncols * spec.nrows;
  if (n > 64 * 64)
    throw ParameterError("dense Cholesky GRF is limited to 4096 cells");
  const RasterCovariate proto(spec.window, spec.ncols, spec.nrows, std::vector<double>(n, 0.0));
  Eigen::MatrixXd cov(n, n);
  const double var = spec.sigma * spec.sigma;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = proto.cell_center(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const Point b = proto.cell_center(j);
      const double c = var * std::exp(-std::hypot(a.x - b.x, a.y - b.y) / spec.range_s);
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericError("GRF covariance matrix is not positive definite");
  factor_->lower = llt.matrixL();
}

CholeskyField::~CholeskyField() = default;

RasterCovariate CholeskyField::sample(Rng& rng) const
{
  const auto n = factor_->lower.rows();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i)
    e(i) = normal(rng);
  const Eigen::VectorXd x = factor_->lower * e;
  return RasterCovariate(spec_.window, spec_.ncols, spec_.nrows,
                         std::vector<double>(x.data(), x.data() + n));
}

RasterCovariate gaussian_random_field(const GRFSpec& spec)
{
  spec.validate();
  Rng rng = substream(spec.seed, {0x6E5FULL});
  try {
    return CirculantEmbedding(spec).sample(rng);
  } catch (const NumericError&) {
    if (spec.ncols * spec.nrows > 64 * 64)
      throw;
  }
  return CholeskyField(spec).sample(rng);
}

ModelSpec ModelSpec::standard(int model_id, double target_m)
{
  switch (model_id) {
  case 1:
  case 2:
    return {model_id, 6.0, 4.0, target_m};
  case 3:
    return {model_id, 5.0, -3.0, target_m};
  default:
    throw ParameterError("model id must be 1, 2 or 3");
  }
}

void ModelSpec::validate() const
{
  if (model_id < 1 || model_id > 3)
    throw ParameterError("model id must be 1, 2 or 3");
  if (!(target_m > 0.0) || !std::isfinite(target_m))
    throw ParameterError("target expected count must be positive");
}

double intensity_scale(const ModelSpec& spec, const RasterCovariate& covariate)
{
  spec.validate();
  CompensatedSum total;
  for (double z : covariate.values()) {
    const double l = std::exp(spec.beta0 + spec.beta1 * z);
    if (!std::isfinite(l))
      throw NumericError("intensity overflows");
    total.add(l);
  }
  const double mass = total.value() * covariate.cell_area();
  if (!(mass > 0.0))
    throw NumericError("intensity has zero mass");
  return spec.target_m / mass;
}

RasterCovariate model_intensity(const ModelSpec& spec, const RasterCovariate& covariate)
{
  const double scale = intensity_scale(spec, covariate);
  std::vector<double> v(covariate.size());
  const auto z = covariate.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = scale * std::exp(spec.beta0 + spec.beta1 * z[i]);
  return covariate.with_values(std::move(v));
}

namespace {

double segment_distance(Point p, Point a, Point b)
{
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

} // namespace

RasterCovariate distance_field(const std::vector<Polyline>& strokes, const Window& window,
                               std::size_t ncols, std::size_t nrows)
{
  if (strokes.empty())
    throw ParameterError("distance field needs at least one stroke");
  auto raw = RasterCovariate::sample(window, ncols, nrows, [&](Point p) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : strokes) {
      if (s.size() == 1)
        d = std::min(d, std::hypot(p.x - s[0].x, p.y - s[0].y));
      for (std::size_t i = 1; i < s.size(); ++i)
        d = std::min(d, segment_distance(p, s[i - 1], s[i]));
    }
    return d;
  });
  const double dmax = raw.max_value();
  if (!(dmax > 0.0))
    throw NumericError("distance field is identically zero");
  std::vector<double> v(raw.values().begin(), raw.values().end());
  for (double& d : v)
    d /= dmax;
  return raw.with_values(std::move(v));
}

std::vector<Polyline> letter_r_strokes()
{
  return {
    {{0.30, 0.15}, {0.30, 0.85}, {0.55, 0.85}, {0.65, 0.79}, {0.68, 0.69},
     {0.65, 0.59}, {0.55, 0.53}, {0.30, 0.53}},
    {{0.45, 0.53}, {0.70, 0.15}},
  };
}

Scenario build_scenario(const ModelSpec& model, const GRFSpec& grf)
{
  model.validate();
  switch (model.model_id) {
  case 1: {
    auto z1 = gaussian_random_field(grf);
    auto lam = model_intensity(model, z1);
    const double c = intensity_scale(model, z1);
    auto rho = [c, model](double z) { return c * std::exp(model.beta0 + model.beta1 * z); };
    return {model, z1, z1, std::move(lam), rho};
  }
  case 2: {
    auto z1 = gaussian_random_field(grf);
    GRFSpec err = grf;
    err.seed = mix64(grf.seed ^ 0xE1ULL);
    const auto e1 = gaussian_random_field(err);
    std::vector<double> sum(z1.size());
    for (std::size_t i = 0; i < sum.size(); ++i)
      sum[i] = z1.values()[i] + e1.values()[i];
    auto gen = z1.with_values(std::move(sum));
    auto lam = model_intensity(model, gen);
    return {model, std::move(z1), std::move(gen), std::move(lam), {}};
  }
  default: {
    auto dr = distance_field(letter_r_strokes(), grf.window, grf.ncols, grf.nrows);
    auto lam = model_intensity(model, dr);
    const double c = intensity_scale(model, dr);
    auto rho = [c, model](double z) { return c * std::exp(model.beta0 + model.beta1 * z); };
    return {model, dr, dr, std::move(lam), rho};
  }
  }
}

PointPattern simulate_poisson(const std::function<double(Point)>& intensity, double lambda_max,
                              const Window& window, Rng& rng)
{
  if (!(lambda_max >= 0.0) || !std::isfinite(lambda_max))
    throw ParameterError("intensity bound must be finite and non-negative");
  if (lambda_max == 0.0)
    return PointPattern(window, {});
  std::poisson_distribution<long> count(lambda_max * window.area());
  std::uniform_real_distribution<double> ux(window.xmin(), window.xmax());
  std::uniform_real_distribution<double> uy(window.ymin(), window.ymax());
  std::uniform_real_distribution<double> keep(0.0, 1.0);
  const long n = count(rng);
  std::vector<Point> pts;
  for (long i = 0; i < n; ++i) {
    const Point p{ux(rng), uy(rng)};
    const double u = keep(rng);
    if (u * lambda_max < intensity(p))
      pts.push_back(p);
  }
  return PointPattern(window, std::move(pts));
}

PointPattern simulate_poisson(const RasterCovariate& intensity, Rng& rng)
{
  const double lmin = intensity.min_value();
  if (lmin < 0.0)
    throw DomainError("intensity must be non-negative");
  // Bilinear interpolation is a convex combination of cell values.
  const double lmax = intensity.max_value();
  return simulate_poisson([&intensity](Point p) { return eval_covariate(intensity, p); }, lmax,
                          intensity.window(), rng);
}

PointPattern simulate_poisson(const RasterCovariate& intensity, std::uint64_t seed)
{
  Rng rng = substream(seed, {0x5157ULL});
  return simulate_poisson(intensity, rng);
}

double ise_rel(const RasterCovariate& lambda_hat, const RasterCovariate& lambda_true)
{
  if (lambda_hat.ncols() != lambda_true.ncols() || lambda_hat.nrows() != lambda_true.nrows() ||
      !(lambda_hat.window() == lambda_true.window()))
    throw ParameterError("ISE_rel needs rasters on the same grid");
  const auto a = lambda_hat.values();
  const auto b = lambda_true.values();
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(b[i] > 0.0))
      throw DomainError("true intensity must be positive on every cell");
    const double r = (a[i] - b[i]) / b[i];
    s.add(r * r);
  }
  return s.value() * lambda_true.cell_area();
}

double ise_rel(const IntensityEstimate& lambda_hat, const RasterCovariate& lambda_true)
{
  return ise_rel(lambda_hat.lambda, lambda_true);
}

} // namespace covkern
