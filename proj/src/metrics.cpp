#include "polsar/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace polsar {

void RegionOfInterest::validate(std::size_t img_h, std::size_t img_w) const {
  if (row0 + height > img_h || col0 + width > img_w) {
    throw InvalidArgument("ROI '" + label + "' (" + std::to_string(row0) + ", " + std::to_string(col0) + ", " +
                          std::to_string(height) + "x" + std::to_string(width) + ") exceeds raster bounds " +
                          std::to_string(img_h) + "x" + std::to_string(img_w));
  }
  if (height * width < 4) throw InvalidArgument("ROI '" + label + "' must cover at least 4 pixels");
}

EnlResult enl(const C2Raster& c2, const RegionOfInterest& roi) {
  roi.validate(c2.height(), c2.width());
  Cov2 mean;
  double mean_tr_sq = 0.0;
  for (std::size_t r = roi.row0; r < roi.row0 + roi.height; ++r) {
    for (std::size_t c = roi.col0; c < roi.col0 + roi.width; ++c) {
      mean += c2(r, c);
      mean_tr_sq += c2(r, c).trace_of_square();
    }
  }
  const double inv = 1.0 / static_cast<double>(roi.height * roi.width);
  mean *= inv;
  mean_tr_sq *= inv;
  const double denom = mean_tr_sq - mean.trace_of_square();
  const double numer = mean.trace() * mean.trace();
  // Rounding can leave a tiny residual for a constant region.
  if (!(denom > 1e-12 * mean_tr_sq)) return {std::numeric_limits<double>::infinity(), true};
  return {numer / denom, false};
}

EpdResult epd_roa(const C2Raster& original, const C2Raster& filtered, const RegionOfInterest& roi,
                  EdgeDirection direction) {
  require_same_shape(original, filtered, "epd_roa");
  roi.validate(original.height(), original.width());
  const std::size_t dr = direction == EdgeDirection::vertical ? 1 : 0;
  const std::size_t dc = direction == EdgeDirection::horizontal ? 1 : 0;
  if (roi.height <= dr || roi.width <= dc) throw InvalidArgument("ROI '" + roi.label + "' too small for any pixel pair");
  EpdResult out;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t r = roi.row0; r + dr < roi.row0 + roi.height; ++r) {
    for (std::size_t c = roi.col0; c + dc < roi.col0 + roi.width; ++c) {
      const double f1 = filtered(r, c).trace();
      const double f2 = filtered(r + dr, c + dc).trace();
      const double o1 = original(r, c).trace();
      const double o2 = original(r + dr, c + dc).trace();
      if (f2 == 0.0 || o2 == 0.0) {
        ++out.skipped;
        continue;
      }
      num += std::abs(f1 / f2);
      den += std::abs(o1 / o2);
      ++out.pairs;
    }
  }
  if (out.pairs == 0 || den == 0.0) throw InvalidArgument("ROI '" + roi.label + "' has no usable pixel pair");
  out.value = num / den;
  return out;
}

double epd_roa_combined(const C2Raster& original, const C2Raster& filtered, const RegionOfInterest& roi) {
  return 0.5 * (epd_roa(original, filtered, roi, EdgeDirection::horizontal).value +
                epd_roa(original, filtered, roi, EdgeDirection::vertical).value);
}

double ssim(const RealImage& x, const RealImage& y, const RegionOfInterest& roi, const SsimOptions& opts) {
  require_same_shape(x, y, "ssim");
  roi.validate(x.height(), x.width());
  const std::size_t win = opts.window;
  if (win == 0 || win > roi.height || win > roi.width) {
    throw InvalidArgument("SSIM window " + std::to_string(win) + " exceeds ROI '" + roi.label + "'");
  }
  if (!(opts.dynamic_range > 0.0)) throw InvalidArgument("SSIM dynamic range must be positive");
  const double L = opts.dynamic_range;
  const double c1 = opts.constants == SsimConstants::linear ? 0.01 * L : (0.01 * L) * (0.01 * L);
  const double c2 = opts.constants == SsimConstants::linear ? 0.03 * L : (0.03 * L) * (0.03 * L);
  const double inv = 1.0 / static_cast<double>(win * win);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = roi.row0; r + win <= roi.row0 + roi.height; ++r) {
    for (std::size_t c = roi.col0; c + win <= roi.col0 + roi.width; ++c) {
      double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (std::size_t i = r; i < r + win; ++i) {
        for (std::size_t j = c; j < c + win; ++j) {
          const double a = x(i, j);
          const double b = y(i, j);
          sx += a;
          sy += b;
          sxx += a * a;
          syy += b * b;
          sxy += a * b;
        }
      }
      const double mx = sx * inv;
      const double my = sy * inv;
      const double vx = sxx * inv - mx * mx;
      const double vy = syy * inv - my * my;
      const double cxy = sxy * inv - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace polsar
