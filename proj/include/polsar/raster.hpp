#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "polsar/cov2.hpp"
#include "polsar/grid.hpp"

namespace polsar {

/// Per-pixel covariance image. Only c11, c22 and c12 are stored; c21 is implied.
using C2Raster = Grid<Cov2>;

/// Boolean mask stored as 0/1 bytes.
using MaskImage = Grid<std::uint8_t>;

using RealImage = Grid<double>;

/// Four intensity bands in fixed order: VV, I, Q, VH.
enum class Band : std::size_t { vv = 0, i = 1, q = 2, vh = 3 };

/// Band-sequential 4-band intensity image (the transform domain).
class BandStack {
 public:
  static constexpr std::size_t kBands = 4;

  BandStack() = default;
  BandStack(std::size_t height, std::size_t width)
      : bands_{RealImage(height, width), RealImage(height, width), RealImage(height, width),
               RealImage(height, width)} {}

  std::size_t height() const noexcept { return bands_[0].height(); }
  std::size_t width() const noexcept { return bands_[0].width(); }

  RealImage& band(std::size_t b) { return bands_.at(b); }
  const RealImage& band(std::size_t b) const { return bands_.at(b); }
  RealImage& band(Band b) { return bands_[static_cast<std::size_t>(b)]; }
  const RealImage& band(Band b) const { return bands_[static_cast<std::size_t>(b)]; }

  friend bool operator==(const BandStack&, const BandStack&) = default;

 private:
  std::array<RealImage, kBands> bands_;
};

/// Co-registered time series of covariance rasters.
struct TemporalStack {
  std::vector<C2Raster> epochs;
  std::vector<std::string> dates;  // ISO-8601, one per epoch

  std::size_t size() const noexcept { return epochs.size(); }
  std::size_t height() const { return epochs.empty() ? 0 : epochs.front().height(); }
  std::size_t width() const { return epochs.empty() ? 0 : epochs.front().width(); }

  /// Throws InvalidArgument unless all epochs share geometry and dates match epochs.
  void validate(std::size_t min_epochs = 1) const;
};

}  // namespace polsar
