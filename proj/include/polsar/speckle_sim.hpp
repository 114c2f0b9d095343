#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polsar/raster.hpp"
#include "polsar/rng.hpp"

namespace polsar {

/// Draws one single-look covariance s*s^H with s = L z, L the Cholesky factor of
/// `truth` and z two independent circular complex standard Gaussians.
/// Throws InvalidArgument if `truth` is not positive semi-definite.
Cov2 sample_single_look(const Cov2& truth, Rng& rng);

/// Mean of `looks` independent single-look draws.
Cov2 sample_multilook(const Cov2& truth, std::size_t looks, Rng& rng);

struct SceneRegion {
  Rect rect;
  Cov2 truth;
};

struct PointTarget {
  std::size_t row = 0;
  std::size_t col = 0;
  Cov2 amplitude;  ///< added to the region truth at that pixel
};

/// Ground-truth covariance field. Rectangular regions are painted in order (later
/// regions win); alternatively a label map indexes `label_truths`.
struct SceneSpec {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<SceneRegion> regions;
  std::optional<Grid<std::uint16_t>> labels;
  std::vector<Cov2> label_truths;
  std::vector<PointTarget> points;

  /// Throws InvalidArgument on uncovered pixels, out-of-bounds geometry or a truth
  /// that is neither positive definite nor positive diagonal.
  void validate() const;
  /// Truth covariance at every pixel.
  C2Raster truth() const;
};

struct ChangeEvent {
  std::size_t epoch = 0;  ///< first epoch at which the replacement holds
  Rect region;
  Cov2 truth;
};

struct ChangeScript {
  std::size_t epochs = 2;
  std::vector<ChangeEvent> events;

  void validate(std::size_t height, std::size_t width) const;
};

/// One independent single-look draw per pixel. Pixel (r, c) of epoch e uses the
/// substream (seed, r, c, e), so output is independent of thread scheduling.
C2Raster simulate_from_truth(const C2Raster& truth, std::uint64_t seed, std::size_t epoch = 0,
                             std::size_t looks = 1);

C2Raster simulate_scene(const SceneSpec& spec, std::uint64_t seed, std::size_t epoch = 0);

struct SimulatedStack {
  TemporalStack stack;
  std::vector<C2Raster> truths;  ///< truth field of each epoch
  MaskImage change_truth;        ///< 1 where the truth differs between any two epochs
};

/// Dates are generated at `interval_days` spacing starting from `start_date` (YYYY-MM-DD).
SimulatedStack simulate_stack(const SceneSpec& spec, const ChangeScript& script, std::uint64_t seed,
                              const std::string& start_date = "2021-01-01", int interval_days = 12);

/// ISO date `days` after `iso` (YYYY-MM-DD).
std::string add_days(const std::string& iso, int days);

}  // namespace polsar
