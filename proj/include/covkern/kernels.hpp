#pragma once

#include <string>
#include <string_view>

namespace covkern {

enum class KernelFamily { gaussian, epanechnikov };

//! Univariate second-order smoothing kernel with its moment constants.
struct Kernel {
  KernelFamily family = KernelFamily::gaussian;
  double mu2 = 1.0;                 // \int z^2 K(z) dz
  double roughness = 0.0;           // R(K) = \int K(z)^2 dz
  double support_radius = 0.0;      // +inf for the gaussian

  static Kernel gaussian();
  static Kernel epanechnikov();
  static Kernel from_name(std::string_view name);

  std::string name() const;

  double operator()(double u) const noexcept;
  //! K''(u); the epanechnikov value ignores the point masses at |u| = 1.
  double second_derivative(double u) const noexcept;
  //! K_h(u) = K(u/h)/h.
  double scaled(double u, double h) const noexcept { return (*this)(u / h) / h; }
  bool has_analytic_second_derivative() const noexcept
  {
    return family == KernelFamily::gaussian;
  }
  //! Half-width beyond which K_h is treated as zero.
  double effective_radius(double h) const noexcept;
};

struct KernelConstants {
  double mu2;
  double roughness;
};

double kernel_eval(const Kernel& k, double u) noexcept;
KernelConstants kernel_constants(const Kernel& k) noexcept;

} // namespace covkern
