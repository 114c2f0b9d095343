#pragma once

#include <cstddef>

#include "polsar/cov2.hpp"
#include "polsar/raster.hpp"

namespace polsar {

/// The four nonnegative intensities that encode a dual-pol covariance matrix.
///   vv = |S_vv|^2, i = |S_vv + S_vh|^2, q = |S_vv + j S_vh|^2, vh = |S_vh|^2  (expectations)
struct IntensityQuad {
  double vv = 0.0;
  double i = 0.0;
  double q = 0.0;
  double vh = 0.0;

  /// Total backscattered power (trace of the covariance matrix).
  double span() const noexcept { return vv + vh; }
  friend bool operator==(const IntensityQuad&, const IntensityQuad&) = default;
};

enum class PsdPolicy {
  reject,   ///< throw InvalidArgument on a non-PSD input
  project,  ///< repair with project_psd first
};

/// Covariance -> intensities. c_i = span + 2 Re(c12), c_q = span + 2 Im(c12).
IntensityQuad forward_transform(const Cov2& c, PsdPolicy policy = PsdPolicy::reject);

/// Intensities -> covariance; exact left inverse of forward_transform.
/// c12 = 0.5 * [(c_i - span) + j (c_q - span)].
Cov2 inverse_transform(const IntensityQuad& q);

/// Nearest-by-rescaling valid matrix: diagonals clamped at 0, then |c12| limited to
/// sqrt(c11 c22) with its phase kept. Valid inputs are returned unchanged.
Cov2 project_psd(const Cov2& c);

struct TransformReport {
  std::size_t clamped_samples = 0;   ///< negative band samples set to 0 before inversion
  std::size_t projected_pixels = 0;  ///< pixels changed by project_psd
};

BandStack transform_raster(const C2Raster& c2, PsdPolicy policy = PsdPolicy::reject,
                           TransformReport* report = nullptr);

/// Pixel-wise inverse. Negative band samples are clamped to 0 first; when `repair_psd`
/// is set each output pixel is passed through project_psd.
C2Raster untransform_raster(const BandStack& bands, bool repair_psd = false, TransformReport* report = nullptr);

/// Sliding boxcar mean of every covariance entry over a win_az x win_rg window.
/// Windows shrink to the in-image subset at the borders. For even sizes the window
/// spans (w-1)/2 samples before the centre and w/2 after.
C2Raster boxcar_multilook(const C2Raster& c2, std::size_t win_az, std::size_t win_rg);

/// Pixel-wise mean over all epochs.
C2Raster temporal_average(const TemporalStack& stack);

/// Trace image (c11 + c22).
RealImage span_image(const C2Raster& c2);

}  // namespace polsar
