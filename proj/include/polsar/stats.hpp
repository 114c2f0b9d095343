#pragma once

#include <span>
#include <vector>

namespace polsar {

/// Percentile with linear interpolation between order statistics (pct in [0, 100]).
/// Takes its input by value because it partially reorders it.
double percentile(std::vector<double> values, double pct);

/// Several percentiles of the same sample, sorting once.
std::vector<double> percentiles(std::vector<double> values, std::span<const double> pcts);

}  // namespace polsar
