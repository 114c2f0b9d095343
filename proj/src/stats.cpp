#include "polsar/stats.hpp"

#include <algorithm>
#include <cmath>

#include "polsar/error.hpp"

namespace polsar {
namespace {

double interpolate_sorted(const std::vector<double>& sorted, double pct) {
  if (pct < 0.0 || pct > 100.0) throw InvalidArgument("percentile out of [0, 100]");
  const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

double percentile(std::vector<double> values, double pct) {
  const double p[] = {pct};
  return percentiles(std::move(values), p).front();
}

std::vector<double> percentiles(std::vector<double> values, std::span<const double> pcts) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(pcts.size());
  for (double p : pcts) out.push_back(interpolate_sorted(values, p));
  return out;
}

}  // namespace polsar
