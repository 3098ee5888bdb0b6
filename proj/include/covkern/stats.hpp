#pragma once

#include <span>
#include <vector>

namespace covkern::stats {

double mean(std::span<const double> x);
//! Sample standard deviation (n-1 denominator).
double sd(std::span<const double> x);
//! Quantile with linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::vector<double> x, double p);
double iqr(std::span<const double> x);
//! 0.9 * min(sd, IQR/1.34) * n^(-1/5). Throws on n < 2 or zero spread.
double silverman_rule(std::span<const double> x);

} // namespace covkern::stats
