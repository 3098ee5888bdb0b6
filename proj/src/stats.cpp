#include "covkern/stats.hpp"

#include "covkern/error.hpp"
#include "covkern/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace covkern::stats {

double mean(std::span<const double> x)
{
  if (x.empty())
    throw ParameterError("mean of empty sample");
  CompensatedSum s;
  for (double v : x)
    s.add(v);
  return s.value() / static_cast<double>(x.size());
}

double sd(std::span<const double> x)
{
  if (x.size() < 2)
    throw ParameterError("standard deviation needs at least two values");
  const double mu = mean(x);
  CompensatedSum s;
  for (double v : x)
    s.add((v - mu) * (v - mu));
  return std::sqrt(s.value() / static_cast<double>(x.size() - 1));
}

double quantile(std::vector<double> x, double p)
{
  if (x.empty())
    throw ParameterError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double iqr(std::span<const double> x)
{
  std::vector<double> v(x.begin(), x.end());
  return quantile(v, 0.75) - quantile(v, 0.25);
}

double silverman_rule(std::span<const double> x)
{
  if (x.size() < 2)
    throw ParameterError("Silverman's rule needs at least two values");
  const double s = sd(x);
  const double r = iqr(x) / 1.34;
  double spread = std::min(s, r);
  if (!(spread > 0.0))
    spread = s; // IQR collapses on heavily tied data; fall back to sd.
  if (!(spread > 0.0))
    throw NumericError("sample has zero spread");
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

} // namespace covkern::stats
