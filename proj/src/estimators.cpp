#include "covkern/estimators.hpp"

#include "covkern/bandwidth.hpp"
#include "covkern/error.hpp"
#include "covkern/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace covkern {

namespace {

void require_bandwidth(double h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw ParameterError("bandwidth must be positive and finite");
}

// Grid index range [lo, hi] of nodes within `radius` of z.
std::pair<std::size_t, std::size_t> node_range(const UniformGrid& grid, double z, double radius)
{
  const double a = std::ceil((z - radius - grid.lo()) / grid.step());
  const double b = std::floor((z + radius - grid.lo()) / grid.step());
  const double last = static_cast<double>(grid.size() - 1);
  if (b < 0.0 || a > last)
    return {1, 0};
  return {static_cast<std::size_t>(std::max(a, 0.0)), static_cast<std::size_t>(std::min(b, last))};
}

template <class KernelFn>
std::vector<double> weighted_kernel_sum(std::span<const double> z, std::span<const double> w,
                                        double h, const Kernel& k, const UniformGrid& grid,
                                        KernelFn kfn)
{
  std::vector<double> out(grid.size(), 0.0);
  const double radius = k.effective_radius(h);
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto [lo, hi] = node_range(grid, z[i], radius);
    for (std::size_t j = lo; j <= hi && lo <= hi; ++j)
      out[j] += w[i] * kfn((grid[j] - z[i]) / h);
  }
  return out;
}

} // namespace

TransformedSample TransformedSample::from_values(std::vector<double> z,
                                                 const CovariateDistribution& dist)
{
  TransformedSample s;
  s.weights.reserve(z.size());
  std::ostringstream bad;
  std::size_t nbad = 0;
  const double eps = dist.negligible_mass();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double g = gstar_at(dist, z[i]);
    if (!(g >= eps) || g == 0.0) {
      if (nbad < 10)
        bad << (nbad ? ", " : "") << "#" << i << " (z=" << z[i] << ", g*=" << g << ")";
      ++nbad;
      continue;
    }
    s.weights.push_back(1.0 / g);
  }
  if (nbad > 0)
    throw NumericError("event in negligible covariate mass: " + bad.str() +
                       (nbad > 10 ? ", ..." : ""));
  s.z = std::move(z);
  return s;
}

TransformedSample TransformedSample::concatenated(const TransformedSample& other) const
{
  TransformedSample s = *this;
  s.z.insert(s.z.end(), other.z.begin(), other.z.end());
  s.weights.insert(s.weights.end(), other.weights.begin(), other.weights.end());
  return s;
}

TransformedSample TransformedSample::without(std::size_t i) const
{
  TransformedSample s = *this;
  s.z.erase(s.z.begin() + static_cast<std::ptrdiff_t>(i));
  s.weights.erase(s.weights.begin() + static_cast<std::ptrdiff_t>(i));
  return s;
}

TransformedSample transform_sample(const PointPattern& pattern, const RasterCovariate& raster,
                                   const CovariateDistribution& dist)
{
  std::vector<double> z;
  if (pattern.z_values()) {
    z = *pattern.z_values();
  } else {
    z.reserve(pattern.size());
    for (const Point& p : pattern.points())
      z.push_back(eval_covariate(raster, p));
  }
  return TransformedSample::from_values(std::move(z), dist);
}

double rho_hat(const TransformedSample& sample, double h, const Kernel& k, double z)
{
  require_bandwidth(h);
  CompensatedSum s;
  for (std::size_t i = 0; i < sample.n(); ++i)
    s.add(sample.weights[i] * k.scaled(z - sample.z[i], h));
  return s.value();
}

double rho_hat_d2(const TransformedSample& sample, double h, const Kernel& k, double z)
{
  require_bandwidth(h);
  const double h3 = h * h * h;
  CompensatedSum s;
  for (std::size_t i = 0; i < sample.n(); ++i)
    s.add(sample.weights[i] * k.second_derivative((z - sample.z[i]) / h) / h3);
  return s.value();
}

double f_hat(const TransformedSample& sample, const CovariateDistribution& dist, double h,
             const Kernel& k, double z)
{
  require_bandwidth(h);
  if (sample.empty())
    return 0.0;
  return gstar_at(dist, z) * rho_hat(sample, h, k, z) / static_cast<double>(sample.n());
}

std::vector<double> rho_hat_on_grid(const TransformedSample& sample, double h, const Kernel& k,
                                    const UniformGrid& grid)
{
  require_bandwidth(h);
  auto out = weighted_kernel_sum(sample.z, sample.weights, h, k, grid,
                                 [&k](double u) { return k(u); });
  for (double& v : out)
    v /= h;
  return out;
}

std::vector<double> rho_hat_d2_on_grid(const TransformedSample& sample, double h,
                                       const Kernel& k, const UniformGrid& grid)
{
  require_bandwidth(h);
  if (k.has_analytic_second_derivative()) {
    auto out = weighted_kernel_sum(sample.z, sample.weights, h, k, grid,
                                   [&k](double u) { return k.second_derivative(u); });
    const double h3 = h * h * h;
    for (double& v : out)
      v /= h3;
    return out;
  }
  // Compactly supported kernels: differentiate the tabulated estimate.
  const auto r = rho_hat_on_grid(sample, h, k, grid);
  std::vector<double> out(r.size(), 0.0);
  const double dz2 = grid.step() * grid.step();
  for (std::size_t j = 1; j + 1 < r.size(); ++j)
    out[j] = (r[j + 1] - 2.0 * r[j] + r[j - 1]) / dz2;
  return out;
}

std::vector<double> f_hat_on_grid(const TransformedSample& sample,
                                  const CovariateDistribution& dist, double h, const Kernel& k)
{
  auto out = rho_hat_on_grid(sample, h, k, dist.grid());
  if (sample.empty()) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  const double inv_n = 1.0 / static_cast<double>(sample.n());
  const auto g = dist.g_star();
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] *= g[j] * inv_n;
  return out;
}

RhoEstimate estimate_rho(const TransformedSample& sample, const CovariateDistribution& dist,
                         double h, const Kernel& k)
{
  auto r = rho_hat_on_grid(sample, h, k, dist.grid());
  const double m = expected_count(r, dist);
  return RhoEstimate{dist.grid(), std::move(r), h, k, m};
}

IntensityEstimate lambda_hat(const RhoEstimate& rho, const RasterCovariate& raster)
{
  std::vector<double> lam(raster.size());
  std::size_t clamped = 0;
  const auto z = raster.values();
  for (std::size_t c = 0; c < lam.size(); ++c) {
    if (z[c] < rho.grid.lo() || z[c] > rho.grid.hi())
      ++clamped;
    lam[c] = std::max(0.0, rho.grid.interpolate(rho.rho_hat, z[c], std::nan("")));
  }
  std::ostringstream prov;
  prov << "weighted kernel rho-hat, kernel=" << rho.kernel.name() << ", h=" << rho.bandwidth;
  return IntensityEstimate{raster.with_values(std::move(lam)), prov.str(), clamped};
}

double guan_edge_correction(const RasterCovariate& raster, double h, const Kernel& k, double zu)
{
  require_bandwidth(h);
  CompensatedSum s;
  for (double zc : raster.values())
    s.add(k.scaled(zu - zc, h));
  return s.value() * raster.cell_area();
}

double guan_estimate(const PointPattern& pattern, const RasterCovariate& raster, double h,
                     const Kernel& k, Point u)
{
  require_bandwidth(h);
  if (pattern.empty())
    return 0.0;
  const double zu = eval_covariate(raster, u);
  const double q = guan_edge_correction(raster, h, k, zu);
  if (!(q > 1e-12 * raster.window().area()))
    throw NumericError("empty covariate neighbourhood");
  CompensatedSum num;
  if (pattern.z_values()) {
    for (double zi : *pattern.z_values())
      num.add(k.scaled(zu - zi, h));
  } else {
    for (const Point& p : pattern.points())
      num.add(k.scaled(zu - eval_covariate(raster, p), h));
  }
  return num.value() / q;
}

double diggle_edge_correction(const Window& w, double h_xy, Point u)
{
  require_bandwidth(h_xy);
  // Isotropic gaussian factorises over the rectangle's axes.
  auto mass = [h_xy](double lo, double hi, double c) {
    const double s = h_xy * std::numbers::sqrt2;
    return 0.5 * (std::erf((hi - c) / s) - std::erf((lo - c) / s));
  };
  return mass(w.xmin(), w.xmax(), u.x) * mass(w.ymin(), w.ymax(), u.y);
}

double diggle_estimate(const PointPattern& pattern, double h_xy, Point u)
{
  require_bandwidth(h_xy);
  if (pattern.empty())
    return 0.0;
  const double norm = 1.0 / (2.0 * std::numbers::pi * h_xy * h_xy);
  CompensatedSum s;
  for (const Point& p : pattern.points()) {
    const double dx = u.x - p.x, dy = u.y - p.y;
    s.add(norm * std::exp(-(dx * dx + dy * dy) / (2.0 * h_xy * h_xy)));
  }
  return s.value() / diggle_edge_correction(pattern.window(), h_xy, u);
}

GuanTable::GuanTable(const RasterCovariate& raster, const UniformGrid& grid, double h,
                     const Kernel& k)
  : grid_(grid), h_(h), k_(k), q_(grid.size(), 0.0)
{
  require_bandwidth(h);
  // Linear binning of cell values onto the grid, then a discrete convolution.
  std::vector<double> bins(grid.size(), 0.0);
  for (double zc : raster.values()) {
    const double f = std::clamp((zc - grid.lo()) / grid.step(), 0.0,
                                static_cast<double>(grid.size() - 1));
    auto i = static_cast<std::size_t>(f);
    if (i >= grid.size() - 1)
      i = grid.size() - 2;
    const double t = f - static_cast<double>(i);
    bins[i] += 1.0 - t;
    bins[i + 1] += t;
  }
  const double cell = raster.cell_area();
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(k.effective_radius(h) / grid.step()));
  std::vector<double> kern(static_cast<std::size_t>(reach) + 1);
  for (std::ptrdiff_t d = 0; d <= reach; ++d)
    kern[static_cast<std::size_t>(d)] = k.scaled(static_cast<double>(d) * grid.step(), h);
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    const double w = bins[static_cast<std::size_t>(b)];
    if (w == 0.0)
      continue;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, b - reach);
         j <= std::min(n - 1, b + reach); ++j)
      q_[static_cast<std::size_t>(j)] += w * kern[static_cast<std::size_t>(std::abs(j - b))];
  }
  for (double& v : q_)
    v *= cell;
}

std::vector<double> GuanTable::numerator(std::span<const double> z_events) const
{
  std::vector<double> ones(z_events.size(), 1.0);
  auto out = weighted_kernel_sum(z_events, ones, h_, k_, grid_, [this](double u) { return k_(u); });
  for (double& v : out)
    v /= h_;
  return out;
}

IntensityEstimate GuanTable::intensity(std::span<const double> z_events,
                                       const RasterCovariate& raster) const
{
  const auto num = numerator(z_events);
  const double floor = 1e-12 * raster.window().area();
  std::vector<double> lam(raster.size());
  std::size_t clamped = 0;
  const auto z = raster.values();
  for (std::size_t c = 0; c < lam.size(); ++c) {
    if (z[c] < grid_.lo() || z[c] > grid_.hi())
      ++clamped;
    const double q = grid_.interpolate(q_, z[c], std::nan(""));
    if (!(q > floor))
      throw NumericError("empty covariate neighbourhood");
    lam[c] = std::max(0.0, grid_.interpolate(num, z[c], std::nan(""))) / q;
  }
  std::ostringstream prov;
  prov << "Guan covariate-distance kernel, kernel=" << k_.name() << ", h=" << h_;
  return IntensityEstimate{raster.with_values(std::move(lam)), prov.str(), clamped};
}

EstimatorMoments f_hat_moments(const std::function<double(double)>& rho,
                               const std::function<double(double)>& gstar, const UniformGrid& grid,
                               double m, double h, const Kernel& k, double z)
{
  require_bandwidth(h);
  if (!(m > 0.0))
    throw ParameterError("expected count must be positive");
  std::vector<double> c1(grid.size()), c2(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double s = grid[j];
    const double g = gstar(s);
    if (!(g > 0.0)) {
      c1[j] = c2[j] = 0.0;
      continue;
    }
    const double kh = k.scaled(z - s, h);
    c1[j] = kh * rho(s);
    c2[j] = kh * kh * rho(s) / g;
  }
  const double conv1 = simpson(c1, grid.step()); // (K_h o rho)(z)
  const double conv2 = simpson(c2, grid.step()); // (K_h^2 o rho/g*)(z)
  const double gz = gstar(z);
  const double a = poisson_reciprocal_moment(m);
  const double em = std::exp(-m);
  const double mean = gz * conv1 / m * (1.0 - em);
  const double var = a * gz * gz / m * conv2 - (a + em * em - em) * gz * gz / (m * m) * conv1 * conv1;
  return {mean, var};
}

} // namespace covkern
