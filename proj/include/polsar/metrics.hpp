#pragma once

#include <cstddef>
#include <string>

#include "polsar/raster.hpp"

namespace polsar {

struct RegionOfInterest {
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::string label;

  /// Throws InvalidArgument naming the label when out of bounds or smaller than 4 pixels.
  void validate(std::size_t img_h, std::size_t img_w) const;
  static RegionOfInterest whole(std::size_t h, std::size_t w, std::string label = "full") {
    return {0, 0, h, w, std::move(label)};
  }
};

struct EnlResult {
  double value = 0.0;
  bool infinite = false;  ///< zero-variance region
};

/// Polarimetric ENL over the ROI:
///   [tr(mean C)]^2 / (mean tr(C C) - tr(mean C mean C))
EnlResult enl(const C2Raster& c2, const RegionOfInterest& roi);

enum class EdgeDirection { horizontal, vertical };

struct EpdResult {
  double value = 0.0;
  std::size_t pairs = 0;    ///< adjacent pairs used
  std::size_t skipped = 0;  ///< pairs with a zero span denominator
};

/// Edge preservation degree based on the ratio of average:
///   sum |SPAN_f(i) / SPAN_f(i+1)| / sum |SPAN_o(i) / SPAN_o(i+1)|
/// over adjacent pairs inside the ROI along `direction`. Pairs where either image has a
/// zero second sample are skipped and counted.
EpdResult epd_roa(const C2Raster& original, const C2Raster& filtered, const RegionOfInterest& roi,
                  EdgeDirection direction);

/// Mean of the horizontal and vertical indices.
double epd_roa_combined(const C2Raster& original, const C2Raster& filtered, const RegionOfInterest& roi);

enum class SsimConstants {
  linear,   ///< C1 = 0.01 L, C2 = 0.03 L
  squared,  ///< C1 = (0.01 L)^2, C2 = (0.03 L)^2
};

struct SsimOptions {
  std::size_t window = 8;
  double dynamic_range = 1.0;
  SsimConstants constants = SsimConstants::linear;
};

/// Mean SSIM over every window x window position fully inside the ROI, with uniform
/// local weights. Throws InvalidArgument if the window does not fit.
double ssim(const RealImage& x, const RealImage& y, const RegionOfInterest& roi, const SsimOptions& opts = {});

}  // namespace polsar
