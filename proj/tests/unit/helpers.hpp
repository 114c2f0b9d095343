#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "polsar/cov2.hpp"
#include "polsar/raster.hpp"
#include "polsar/rng.hpp"

namespace testing {

inline std::filesystem::path tmp_path(const std::string& name) {
  const std::filesystem::path dir(POLSAR_TEST_TMP);
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline double rel_err(double got, double want) {
  const double d = std::abs(got - want);
  return want == 0.0 ? d : d / std::abs(want);
}

/// Full-rank random PSD matrix with a log-uniform scale over ~6 decades.
inline polsar::Cov2 random_psd(polsar::Rng& rng) {
  const auto a = rng.complex_gaussian();
  const auto b = rng.complex_gaussian();
  const auto c = rng.complex_gaussian();
  const auto d = rng.complex_gaussian();
  const double scale = std::pow(10.0, 6.0 * rng.uniform() - 3.0);
  polsar::Cov2 m;
  // sum of two outer products (a, b)(a, b)^H + (c, d)(c, d)^H
  m.c11 = scale * (std::norm(a) + std::norm(c));
  m.c22 = scale * (std::norm(b) + std::norm(d));
  m.c12 = scale * (a * std::conj(b) + c * std::conj(d));
  return m;
}

inline polsar::C2Raster random_c2(std::size_t h, std::size_t w, std::uint64_t seed) {
  polsar::Rng rng(seed);
  polsar::C2Raster r(h, w);
  for (auto& px : r.pixels()) px = random_psd(rng);
  return r;
}

inline polsar::C2Raster constant_c2(std::size_t h, std::size_t w, const polsar::Cov2& v) {
  return polsar::C2Raster(h, w, v);
}

/// Kolmogorov-Smirnov distance of a sample against a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

}  // namespace testing
