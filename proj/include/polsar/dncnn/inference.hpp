#pragma once

#include <cstddef>
#include <vector>

#include "polsar/dataset.hpp"
#include "polsar/dncnn/model.hpp"
#include "polsar/transform.hpp"

namespace polsar::nn {

struct DespeckleOptions {
  std::size_t tile = 256;
  std::size_t overlap = 16;
  bool repair_psd = true;
};

struct DespeckleReport {
  std::size_t tiles = 0;
  ClipCounts input_clips;        ///< normalization clipping of the input bands
  std::size_t output_clipped = 0;  ///< despeckled normalized samples clipped to [0, 1]
  TransformReport inverse;         ///< clamping / PSD repair during the inverse transform
};

/// Tile start offsets along one axis: stride tile - overlap, last tile flush with the end.
std::vector<std::size_t> tile_starts(std::size_t length, std::size_t tile, std::size_t overlap);

/// Runs the trained network over a normalized band stack and returns y - R(y), blending
/// overlapping tiles with weights that are zero within the network's zero-padding
/// influence of an interior tile edge and ramp linearly to 1 across the overlap.
BandStack despeckle_bands(const BandStack& normalized, const Network<float>& net, const DespeckleOptions& opts,
                          std::size_t* tile_count = nullptr);

/// Transform, normalize, tiled inference, clip to [0, 1], denormalize, inverse transform,
/// optional PSD repair. Output geometry equals input geometry.
C2Raster despeckle_raster(const C2Raster& c2, const NetworkModel& model, const DespeckleOptions& opts = {},
                          DespeckleReport* report = nullptr);

}  // namespace polsar::nn
