#include "covkern/quadrature.hpp"

#include "covkern/error.hpp"

#include <cmath>
#include <limits>

namespace covkern {

UniformGrid::UniformGrid(double lo, double hi, std::size_t n)
  : lo_(lo), hi_(hi), n_(n)
{
  if (n < 2)
    throw ParameterError("grid needs at least two nodes");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ParameterError("grid bounds must be finite with hi > lo");
  step_ = (hi - lo) / static_cast<double>(n - 1);
}

std::vector<double> UniformGrid::nodes() const
{
  std::vector<double> z(n_);
  for (std::size_t i = 0; i < n_; ++i)
    z[i] = (*this)[i];
  z.back() = hi_;
  return z;
}

double UniformGrid::interpolate(std::span<const double> values, double z, double outside) const
{
  if (z < lo_ || z > hi_) {
    if (!std::isnan(outside))
      return outside;
    return z < lo_ ? values.front() : values.back();
  }
  const double f = (z - lo_) / step_;
  auto i = static_cast<std::size_t>(f);
  if (i >= n_ - 1)
    return values[n_ - 1];
  const double t = f - static_cast<double>(i);
  return values[i] + t * (values[i + 1] - values[i]);
}

double simpson(std::span<const double> v, double step)
{
  const std::size_t n = v.size();
  if (n < 2)
    return 0.0;
  const std::size_t panels = n - 1;
  const std::size_t even = panels - panels % 2;
  CompensatedSum s;
  if (even >= 2) {
    s.add(v[0]);
    s.add(v[even]);
    for (std::size_t i = 1; i < even; ++i)
      s.add((i % 2 ? 4.0 : 2.0) * v[i]);
  }
  double total = s.value() * step / 3.0;
  if (even != panels)
    total += 0.5 * step * (v[n - 2] + v[n - 1]);
  return total;
}

std::vector<double> cumulative_trapezoid(std::span<const double> v, double step)
{
  std::vector<double> out(v.size(), 0.0);
  CompensatedSum s;
  for (std::size_t i = 1; i < v.size(); ++i) {
    s.add(0.5 * step * (v[i - 1] + v[i]));
    out[i] = s.value();
  }
  return out;
}

void CompensatedSum::add(double v) noexcept
{
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v))
    comp_ += (sum_ - t) + v;
  else
    comp_ += (v - t) + sum_;
  sum_ = t;
}

} // namespace covkern
