#include "covkern/bandwidth.hpp"

#include "covkern/error.hpp"
#include "covkern/quadrature.hpp"
#include "covkern/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace covkern {

double poisson_reciprocal_moment(double m)
{
  if (!(m > 0.0) || !std::isfinite(m))
    throw ParameterError("A(m) requires m > 0");
  // term(n) = e^-m m^n / (n n!); start at the mode of the Poisson weights and
  // walk both ways so that large m neither underflows nor loses terms.
  auto log_term = [m](double n) { return -m + n * std::log(m) - std::lgamma(n + 1.0) - std::log(n); };
  const double mode = std::max(1.0, std::floor(m));
  CompensatedSum sum;
  const double t0 = std::exp(log_term(mode));
  sum.add(t0);
  for (double n = mode + 1.0;; n += 1.0) {
    const double t = std::exp(log_term(n));
    sum.add(t);
    if (t < 1e-14 * sum.value())
      break;
  }
  for (double n = mode - 1.0; n >= 1.0; n -= 1.0) {
    const double t = std::exp(log_term(n));
    sum.add(t);
    if (t < 1e-14 * sum.value())
      break;
  }
  return sum.value();
}

double amise_optimal_bandwidth(double a_m, double m, double curvature, const Kernel& k)
{
  if (!(curvature > 0.0) || !std::isfinite(curvature))
    throw NumericError("flat curvature functional");
  const double p = 1.0 - std::exp(-m);
  return std::pow(a_m * k.roughness / (k.mu2 * k.mu2 * p * p * curvature), 0.2);
}

double amise(double h, double a_m, double m, double curvature, const Kernel& k)
{
  const double p = 1.0 - std::exp(-m);
  return p * p * std::pow(h, 4) / 4.0 * curvature * k.mu2 * k.mu2 + a_m * k.roughness / h;
}

double curvature_functional(std::span<const double> psi, const CovariateDistribution& dist)
{
  const auto g = dist.g_star();
  const double eps = dist.negligible_mass();
  std::vector<double> y(psi.size());
  for (std::size_t j = 0; j < y.size(); ++j)
    y[j] = g[j] > eps ? psi[j] * psi[j] : 0.0;
  return simpson(y, dist.grid().step());
}

BandwidthReport silverman(const TransformedSample& sample)
{
  if (sample.n() < 2)
    throw ParameterError("Silverman's rule needs at least two events");
  BandwidthReport r;
  r.method = "silverman";
  r.h = stats::silverman_rule(sample.z);
  r.diagnostics["sd"] = stats::sd(sample.z);
  r.diagnostics["iqr"] = stats::iqr(sample.z);
  r.diagnostics["n"] = static_cast<double>(sample.n());
  return r;
}

BandwidthReport rule_of_thumb(const TransformedSample& sample, const CovariateDistribution& dist,
                              const Kernel& k, bool exact_a)
{
  if (sample.n() < 2)
    throw ParameterError("rule-of-thumb needs at least two events");
  const double mu = stats::mean(sample.z);
  const double sigma = stats::sd(sample.z);
  if (!(sigma > 0.0))
    throw NumericError("degenerate sample standard deviation");

  const auto g = dist.g_star();
  const auto g1 = dist.g_star_d1();
  const auto g2 = dist.g_star_d2();
  const double eps = dist.negligible_mass();
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> psi(dist.size(), 0.0); // rho'' g* / m under the normal reference
  for (std::size_t j = 0; j < psi.size(); ++j) {
    if (!(g[j] > eps))
      continue;
    const double u = (dist.grid()[j] - mu) / sigma;
    const double f = norm * std::exp(-0.5 * u * u);
    const double f1 = -u / sigma * f;
    const double f2 = (u * u - 1.0) / (sigma * sigma) * f;
    const double r1 = g1[j] / g[j];
    const double r2 = g2[j] / g[j];
    psi[j] = f2 - 2.0 * f1 * r1 - f * r2 + 2.0 * f * r1 * r1;
  }
  const double curv = curvature_functional(psi, dist);
  const double n = static_cast<double>(sample.n());
  const double a = exact_a ? poisson_reciprocal_moment(n) : 1.0 / n;

  BandwidthReport r;
  r.method = "rt";
  r.h = amise_optimal_bandwidth(a, n, curv, k);
  r.diagnostics["mu"] = mu;
  r.diagnostics["sigma"] = sigma;
  r.diagnostics["curvature"] = curv;
  r.diagnostics["A"] = a;
  r.diagnostics["n"] = n;
  return r;
}

double cv_score(const TransformedSample& sample, const CovariateDistribution& dist,
                const Kernel& k, double h)
{
  const std::size_t n = sample.n();
  if (n < 2)
    throw ParameterError("cross-validation needs at least two events");
  const auto f = f_hat_on_grid(sample, dist, h, k);
  std::vector<double> f2(f.size());
  for (std::size_t j = 0; j < f.size(); ++j)
    f2[j] = f[j] * f[j];
  const double integral = simpson(f2, dist.grid().step());

  CompensatedSum loo;
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum s;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        s.add(sample.weights[j] * k.scaled(sample.z[i] - sample.z[j], h));
    loo.add(gstar_at(dist, sample.z[i]) * s.value() * inv);
  }
  return integral - 2.0 / static_cast<double>(n) * loo.value();
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count)
{
  if (!(lo > 0.0) || !(hi > lo) || count < 2)
    throw ParameterError("log grid needs 0 < lo < hi and at least two points");
  std::vector<double> out(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> default_h_grid(double h_center, std::size_t count, double decades)
{
  const double f = std::pow(10.0, decades / 2.0);
  return log_spaced(h_center / f, h_center * f, count);
}

std::pair<std::size_t, bool> grid_argmin(std::span<const double> values)
{
  std::size_t best = values.size();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::isfinite(values[i]) && (best == values.size() || values[i] < values[best]))
      best = i;
  if (best == values.size())
    throw NumericError("criterion is non-finite on the whole grid");
  return {best, best == 0 || best + 1 == values.size()};
}

BandwidthReport cv_bandwidth(const TransformedSample& sample, const CovariateDistribution& dist,
                             const Kernel& k, std::span<const double> h_grid)
{
  if (sample.n() < 2)
    throw ParameterError("cross-validation needs at least two events");
  if (h_grid.empty())
    throw ParameterError("empty bandwidth grid");
  for (std::size_t i = 0; i < h_grid.size(); ++i)
    if (!(h_grid[i] > 0.0) || (i > 0 && !(h_grid[i] > h_grid[i - 1])))
      throw ParameterError("bandwidth grid must be positive and increasing");

  std::vector<double> scores(h_grid.size());
  for (std::size_t i = 0; i < h_grid.size(); ++i)
    scores[i] = cv_score(sample, dist, k, h_grid[i]);
  const auto [best, boundary] = grid_argmin(scores);

  BandwidthReport r;
  r.method = "cv";
  r.h = h_grid[best];
  r.boundary_hit = boundary;
  r.diagnostics["score"] = scores[best];
  r.diagnostics["boundary_hit"] = boundary ? 1.0 : 0.0;
  for (std::size_t i = 0; i < h_grid.size(); ++i)
    r.curve.emplace_back(h_grid[i], scores[i]);
  return r;
}

double guan_cv_score(const GuanTable& table, std::span<const double> z_events,
                     const IntensityEstimate& estimate, const Kernel& k)
{
  CompensatedSum sq;
  for (double v : estimate.lambda.values())
    sq.add(v * v);
  const double h = table.bandwidth();
  CompensatedSum loo;
  for (std::size_t i = 0; i < z_events.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < z_events.size(); ++j)
      if (j != i)
        s += k.scaled(z_events[i] - z_events[j], h);
    loo.add(s / table.q_at(z_events[i]));
  }
  return sq.value() * estimate.lambda.cell_area() - 2.0 * loo.value();
}

BandwidthReport guan_cv_bandwidth(std::span<const double> z_events, const RasterCovariate& raster,
                                  const UniformGrid& grid, const Kernel& k,
                                  std::span<const double> h_grid)
{
  if (z_events.size() < 2)
    throw ParameterError("cross-validation needs at least two events");
  if (h_grid.empty())
    throw ParameterError("empty bandwidth grid");
  std::vector<double> scores(h_grid.size(), std::nan(""));
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    try {
      const GuanTable table(raster, grid, h_grid[i], k);
      scores[i] = guan_cv_score(table, z_events, table.intensity(z_events, raster), k);
    } catch (const NumericError&) {
    }
  }
  const auto [best, boundary] = grid_argmin(scores);
  BandwidthReport r;
  r.method = "cv_guan";
  r.h = h_grid[best];
  r.boundary_hit = boundary;
  r.diagnostics["score"] = scores[best];
  r.diagnostics["boundary_hit"] = boundary ? 1.0 : 0.0;
  for (std::size_t i = 0; i < h_grid.size(); ++i)
    r.curve.emplace_back(h_grid[i], scores[i]);
  return r;
}

BandwidthReport h_amise_oracle(const std::function<double(double)>& rho_d2,
                               const CovariateDistribution& dist, double m, const Kernel& k)
{
  if (!(m > 0.0))
    throw ParameterError("expected count must be positive");
  std::vector<double> psi(dist.size());
  const auto g = dist.g_star();
  for (std::size_t j = 0; j < psi.size(); ++j)
    psi[j] = rho_d2(dist.grid()[j]) * g[j] / m;
  const double curv = curvature_functional(psi, dist);
  const double a = poisson_reciprocal_moment(m);

  BandwidthReport r;
  r.method = "amise_oracle";
  r.h = amise_optimal_bandwidth(a, m, curv, k);
  r.diagnostics["curvature"] = curv;
  r.diagnostics["A"] = a;
  r.diagnostics["m"] = m;
  return r;
}

double pilot_bandwidth(const BandwidthReport& rt, std::size_t n)
{
  if (!(rt.h > 0.0))
    throw ParameterError("rule-of-thumb bandwidth must be positive");
  if (n < 1)
    throw ParameterError("pilot bandwidth needs n >= 1");
  return std::pow(static_cast<double>(n), -2.0 / 35.0) * rt.h;
}

} // namespace covkern
