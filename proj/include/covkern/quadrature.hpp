#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace covkern {

//! Equally spaced grid lo, lo+step, ..., hi with n >= 2 nodes.
class UniformGrid {
public:
  UniformGrid(double lo, double hi, std::size_t n);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return n_; }
  double operator[](std::size_t i) const noexcept { return lo_ + static_cast<double>(i) * step_; }
  std::vector<double> nodes() const;

  //! Linear interpolation of tabulated values; outside [lo, hi] returns
  //! `outside` (NaN means clamp to the end value).
  double interpolate(std::span<const double> values, double z, double outside) const;

private:
  double lo_, hi_, step_;
  std::size_t n_;
};

//! Composite Simpson rule for samples on a uniform grid. With an odd number
//! of panels the last panel is integrated by the trapezoid rule.
double simpson(std::span<const double> values, double step);

//! Running trapezoid integral, starting at 0.
std::vector<double> cumulative_trapezoid(std::span<const double> values, double step);

//! Neumaier-compensated summation.
class CompensatedSum {
public:
  void add(double v) noexcept;
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

} // namespace covkern
