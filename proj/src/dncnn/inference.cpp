#include "polsar/dncnn/inference.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace polsar::nn {

std::vector<std::size_t> tile_starts(std::size_t length, std::size_t tile, std::size_t overlap) {
  if (tile <= overlap) throw InvalidArgument("tile size must exceed the overlap");
  if (length <= tile) return {0};
  std::vector<std::size_t> starts;
  const std::size_t stride = tile - overlap;
  for (std::size_t s = 0; s + tile < length; s += stride) starts.push_back(s);
  starts.push_back(length - tile);
  return starts;
}

namespace {

/// Blend weights along one axis of a tile spanning [start, start+size) in an image of `length`.
std::vector<double> axis_weights(std::size_t start, std::size_t size, std::size_t length, std::size_t overlap,
                                 std::size_t margin) {
  const double ramp = static_cast<double>(overlap - 2 * margin + 1);
  const bool leading = start > 0;
  const bool trailing = start + size < length;
  std::vector<double> w(size, 1.0);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t d = std::numeric_limits<std::size_t>::max();
    if (leading) d = std::min(d, i);
    if (trailing) d = std::min(d, size - 1 - i);
    if (d == std::numeric_limits<std::size_t>::max()) continue;
    w[i] = d < margin ? 0.0 : std::min(1.0, static_cast<double>(d - margin + 1) / ramp);
  }
  return w;
}

}  // namespace

BandStack despeckle_bands(const BandStack& normalized, const Network<float>& net, const DespeckleOptions& opts,
                          std::size_t* tile_count) {
  const auto& cfg = net.config;
  const std::size_t field = 2 * cfg.receptive_radius() + 1;
  if (opts.tile < field) {
    throw InvalidArgument("tile size " + std::to_string(opts.tile) + " is smaller than the network receptive field (" +
                          std::to_string(field) + ")");
  }
  const std::size_t h = normalized.height();
  const std::size_t w = normalized.width();
  const auto rows = tile_starts(h, opts.tile, opts.overlap);
  const auto cols = tile_starts(w, opts.tile, opts.overlap);
  const std::size_t margin = std::min(cfg.receptive_radius(), opts.overlap / 2);

  std::vector<double> acc(4 * h * w, 0.0);
  std::vector<double> weight(h * w, 0.0);
  std::size_t tiles = 0;
  for (auto r0 : rows) {
    const std::size_t th = std::min(opts.tile, h - r0);
    const auto wy = axis_weights(r0, th, h, opts.overlap, margin);
    for (auto c0 : cols) {
      const std::size_t tw = std::min(opts.tile, w - c0);
      const auto wx = axis_weights(c0, tw, w, opts.overlap, margin);
      Tensor4<float> x(1, 4, th, tw);
      for (std::size_t b = 0; b < 4; ++b) {
        const auto& band = normalized.band(b);
        for (std::size_t y = 0; y < th; ++y) {
          for (std::size_t xx = 0; xx < tw; ++xx) x(0, b, y, xx) = static_cast<float>(band(r0 + y, c0 + xx));
        }
      }
      const Tensor4<float> residual = network_infer(net, x);
      for (std::size_t y = 0; y < th; ++y) {
        for (std::size_t xx = 0; xx < tw; ++xx) {
          const double wt = wy[y] * wx[xx];
          if (wt == 0.0) continue;
          const std::size_t idx = (r0 + y) * w + c0 + xx;
          weight[idx] += wt;
          for (std::size_t b = 0; b < 4; ++b) {
            acc[b * h * w + idx] += wt * (static_cast<double>(x(0, b, y, xx)) - residual(0, b, y, xx));
          }
        }
      }
      ++tiles;
    }
  }
  BandStack out(h, w);
  for (std::size_t b = 0; b < 4; ++b) {
    auto& band = out.band(b);
    for (std::size_t i = 0; i < h * w; ++i) band[i] = acc[b * h * w + i] / weight[i];
  }
  if (tile_count) *tile_count = tiles;
  return out;
}

C2Raster despeckle_raster(const C2Raster& c2, const NetworkModel& model, const DespeckleOptions& opts,
                          DespeckleReport* report) {
  DespeckleReport local;
  const BandStack normalized = normalize(transform_raster(c2, PsdPolicy::project), model.norm, &local.input_clips);
  BandStack restored = despeckle_bands(normalized, model.net, opts, &local.tiles);
  for (std::size_t b = 0; b < 4; ++b) {
    for (auto& v : restored.band(b)) {
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        ++local.output_clipped;
      }
    }
  }
  C2Raster out = untransform_raster(denormalize(restored, model.norm), opts.repair_psd, &local.inverse);
  if (report) *report = local;
  return out;
}

}  // namespace polsar::nn
