#include "covkern/kernels.hpp"

#include "covkern/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace covkern {

namespace {
constexpr double inv_sqrt_2pi = 0.39894228040143267794;
// exp(-u^2/2) < 1e-17 beyond this, far below double resolution of any sum.
constexpr double gaussian_cutoff = 9.0;
} // namespace

Kernel Kernel::gaussian()
{
  return {KernelFamily::gaussian, 1.0, 0.5 / std::sqrt(std::numbers::pi),
          std::numeric_limits<double>::infinity()};
}

Kernel Kernel::epanechnikov()
{
  return {KernelFamily::epanechnikov, 0.2, 0.6, 1.0};
}

Kernel Kernel::from_name(std::string_view name)
{
  if (name == "gaussian")
    return gaussian();
  if (name == "epanechnikov")
    return epanechnikov();
  throw ParameterError("unknown kernel '" + std::string(name) + "'");
}

std::string Kernel::name() const
{
  return family == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

double Kernel::operator()(double u) const noexcept
{
  switch (family) {
  case KernelFamily::gaussian:
    return inv_sqrt_2pi * std::exp(-0.5 * u * u);
  case KernelFamily::epanechnikov:
    return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

double Kernel::second_derivative(double u) const noexcept
{
  switch (family) {
  case KernelFamily::gaussian:
    return inv_sqrt_2pi * (u * u - 1.0) * std::exp(-0.5 * u * u);
  case KernelFamily::epanechnikov:
    return std::abs(u) < 1.0 ? -1.5 : 0.0;
  }
  return 0.0;
}

double Kernel::effective_radius(double h) const noexcept
{
  return (family == KernelFamily::gaussian ? gaussian_cutoff : 1.0) * h;
}

double kernel_eval(const Kernel& k, double u) noexcept { return k(u); }

KernelConstants kernel_constants(const Kernel& k) noexcept { return {k.mu2, k.roughness}; }

} // namespace covkern
