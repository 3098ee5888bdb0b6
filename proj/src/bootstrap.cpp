#include "covkern/bootstrap.hpp"

#include "covkern/error.hpp"
#include "covkern/parallel.hpp"
#include "covkern/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace covkern {

BootstrapWorld build_world(const TransformedSample& sample, const CovariateDistribution& dist,
                           double b, const Kernel& k, std::uint64_t seed)
{
  if (!(b > 0.0) || !std::isfinite(b))
    throw ParameterError("pilot bandwidth must be positive");
  if (sample.n() < 1)
    throw ParameterError("bootstrap world needs at least one event");

  RhoEstimate rho = estimate_rho(sample, dist, b, k);
  if (!(rho.m_hat > 0.0))
    throw NumericError("bootstrap world has non-positive expected count");
  const double m = rho.m_hat;
  const auto g = dist.g_star();
  const double dz = dist.grid().step();

  std::vector<double> f(dist.size());
  for (std::size_t j = 0; j < f.size(); ++j)
    f[j] = rho.rho_hat[j] * g[j] / m;
  const double mass = simpson(f, dz);
  for (double& v : f)
    v /= mass;

  auto cdf = cumulative_trapezoid(f, dz);
  const double end = cdf.back();
  for (double& v : cdf)
    v /= end;
  cdf.back() = 1.0;

  auto psi = rho_hat_d2_on_grid(sample, b, k, dist.grid());
  for (std::size_t j = 0; j < psi.size(); ++j)
    psi[j] *= g[j] / m;

  return BootstrapWorld{b,      k,         dist,           std::move(rho), m,
                        std::move(f), std::move(cdf), std::move(psi), seed};
}

TransformedSample resample(const BootstrapWorld& world, Rng& rng)
{
  std::poisson_distribution<long> count(world.m_hat);
  const long n = count(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& cdf = world.cdf;
  const UniformGrid& grid = world.grid();
  const double eps = world.dist.negligible_mass();

  TransformedSample s;
  s.z.reserve(static_cast<std::size_t>(n));
  s.weights.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double u = unif(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t j = static_cast<std::size_t>(it - cdf.begin());
    j = std::clamp<std::size_t>(j, 1, cdf.size() - 1) - 1;
    // Flat cdf cells carry no mass; upper_bound never lands in one unless u
    // hits the boundary exactly.
    const double width = cdf[j + 1] - cdf[j];
    const double t = width > 0.0 ? (u - cdf[j]) / width : 0.5;
    const double z = grid[j] + std::clamp(t, 0.0, 1.0) * grid.step();
    s.z.push_back(z);
    s.weights.push_back(1.0 / std::max(gstar_at(world.dist, z), eps));
  }
  return s;
}

TransformedSample resample(const BootstrapWorld& world, std::uint64_t index)
{
  Rng rng = substream(world.rng_seed, {0xB007ULL, index});
  return resample(world, rng);
}

double amise_star(const BootstrapWorld& world, double h)
{
  if (!(h > 0.0))
    throw ParameterError("bandwidth must be positive");
  const double curv = curvature_functional(world.psi, world.dist);
  return amise(h, poisson_reciprocal_moment(world.m_hat), world.m_hat, curv, world.kernel);
}

double mise_star_closed_form(const BootstrapWorld& world, double h)
{
  if (!(h > 0.0))
    throw ParameterError("bandwidth must be positive");
  const double dz = world.grid().step();
  const double m = world.m_hat;
  const double em = std::exp(-m);
  std::vector<double> f2(world.f_tilde.size()), fpsi(world.f_tilde.size());
  for (std::size_t j = 0; j < f2.size(); ++j) {
    f2[j] = world.f_tilde[j] * world.f_tilde[j];
    fpsi[j] = world.f_tilde[j] * world.psi[j];
  }
  const double r_f = simpson(f2, dz);
  const double cross = simpson(fpsi, dz);
  return em * em * r_f + amise_star(world, h) -
         em * (1.0 - em) * h * h * world.kernel.mu2 * cross;
}

MonteCarloEstimate mise_star_monte_carlo(const BootstrapWorld& world, double h, std::size_t B,
                                         unsigned threads)
{
  if (B < 2)
    throw ParameterError("Monte Carlo MISE* needs at least two replicates");
  if (!(h > 0.0))
    throw ParameterError("bandwidth must be positive");
  const double dz = world.grid().step();
  std::vector<double> ise(B);
  parallel_for(B, threads, [&](std::size_t b) {
    const TransformedSample s = resample(world, static_cast<std::uint64_t>(b));
    const auto f = f_hat_on_grid(s, world.dist, h, world.kernel);
    std::vector<double> d2(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double d = f[j] - world.f_tilde[j];
      d2[j] = d * d;
    }
    ise[b] = simpson(d2, dz);
  });
  CompensatedSum sum, sq;
  for (double v : ise)
    sum.add(v);
  const double mean = sum.value() / static_cast<double>(B);
  for (double v : ise)
    sq.add((v - mean) * (v - mean));
  const double var = sq.value() / static_cast<double>(B - 1);
  return {mean, std::sqrt(var / static_cast<double>(B))};
}

EstimatorMoments bootstrap_moments(const BootstrapWorld& world, double h, double z)
{
  const auto& grid = world.grid();
  const auto& rho = world.rho_b.rho_hat;
  const auto g = world.dist.g_star();
  const double eps = world.dist.negligible_mass();
  std::vector<double> c1(grid.size()), c2(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double kh = world.kernel.scaled(z - grid[j], h);
    c1[j] = kh * rho[j];
    c2[j] = g[j] > eps ? kh * kh * rho[j] / g[j] : 0.0;
  }
  const double conv1 = simpson(c1, grid.step());
  const double conv2 = simpson(c2, grid.step());
  const double m = world.m_hat;
  const double gz = gstar_at(world.dist, z);
  const double a = poisson_reciprocal_moment(m);
  const double em = std::exp(-m);
  const double mean = gz / m * conv1 * (1.0 - em);
  const double var = gz * gz / m * conv2 * a - gz * gz / (m * m) * conv1 * conv1 * (a + em * em - em);
  return {mean, var};
}

BandwidthReport h_boot_with_pilot(const TransformedSample& sample,
                                  const CovariateDistribution& dist, const Kernel& k, double b)
{
  const BootstrapWorld world = build_world(sample, dist, b, k, 0);
  const double curv = curvature_functional(world.psi, dist);
  const double a = poisson_reciprocal_moment(world.m_hat);
  BandwidthReport r;
  r.method = "boot";
  r.h = amise_optimal_bandwidth(a, world.m_hat, curv, k);
  r.diagnostics["pilot_b"] = b;
  r.diagnostics["m_hat"] = world.m_hat;
  r.diagnostics["A"] = a;
  r.diagnostics["curvature"] = curv;
  return r;
}

BandwidthReport h_boot(const TransformedSample& sample, const CovariateDistribution& dist,
                       const Kernel& k)
{
  if (sample.n() < 2)
    throw ParameterError("bootstrap bandwidth needs at least two events");
  const BandwidthReport rt = rule_of_thumb(sample, dist, k);
  const double b = pilot_bandwidth(rt, sample.n());
  BandwidthReport r = h_boot_with_pilot(sample, dist, k, b);
  r.diagnostics["h_rt"] = rt.h;
  return r;
}

} // namespace covkern
