#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "polsar/change_detect.hpp"
#include "polsar/raster.hpp"

namespace polsar {

/// Per-band linear normalization bounds.
struct NormStats {
  std::array<double, 4> x_min{};
  std::array<double, 4> x_max{};

  void validate() const;  ///< x_max > x_min for every band
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Per-band percentiles over every sample of every stack (defaults: 0 and 99.9).
/// Throws InvalidArgument when a band is degenerate (x_max == x_min).
NormStats compute_norm_stats(std::span<const BandStack> stacks, double lo_pct = 0.0, double hi_pct = 99.9);

struct ClipCounts {
  std::size_t below = 0;
  std::size_t above = 0;
};

/// (x - x_min) / (x_max - x_min), clipped to [0, 1].
BandStack normalize(const BandStack& x, const NormStats& norm, ClipCounts* clips = nullptr);
/// x_n * (x_max - x_min) + x_min
BandStack denormalize(const BandStack& x, const NormStats& norm);

struct PatchProvenance {
  std::uint32_t stack_id = 0;
  std::uint32_t epoch = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const PatchProvenance&, const PatchProvenance&) = default;
};

/// Noisy/clean training pair, each a 4 x P x P channel-major tensor of normalized intensities.
struct PatchPair {
  std::vector<float> noisy;
  std::vector<float> clean;
  PatchProvenance provenance;
  float change_ratio = 0.0f;
  friend bool operator==(const PatchPair&, const PatchPair&) = default;
};

struct PatchDataset {
  std::vector<PatchPair> pairs;
  NormStats norm;
  std::size_t patch_size = 64;
  std::string source_digest;

  std::size_t channels() const noexcept { return 4; }
  std::size_t pair_floats() const noexcept { return channels() * patch_size * patch_size; }
  friend bool operator==(const PatchDataset&, const PatchDataset&) = default;
};

struct SamplingOptions {
  std::size_t count = 1000;
  std::size_t patch = 64;
  double max_change_ratio = 0.10;
  std::uint64_t seed = 0;
  std::uint32_t stack_id = 0;
  /// Draw budget as a multiple of `count`.
  std::size_t attempts_per_patch = 100;
};

struct SamplingReport {
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  ClipCounts clips;
  double acceptance_rate() const noexcept {
    return attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
  }
};

/// Draws (epoch, row, col) uniformly with replacement and keeps a footprint only if
/// its changed fraction is below max_change_ratio. The noisy patch is the normalized
/// transform of that epoch, the clean patch that of `reference` at the same footprint.
/// `mask` may be empty, meaning no pixel is changed.
/// Throws Error when fewer than `count` patches are accepted within the draw budget.
PatchDataset sample_patches(const TemporalStack& stack, const C2Raster& reference, const MaskImage& mask,
                            const NormStats& norm, const SamplingOptions& opts, SamplingReport* report = nullptr);

/// Changed fraction of the mask inside the patch footprint at (row, col).
double footprint_change_ratio(const MaskImage& mask, std::size_t row, std::size_t col, std::size_t patch);

// "PSD1" container: header (magic, version, count, patch size, channels, norm stats,
// digest), then per pair provenance, change ratio and little-endian f32 samples.
std::vector<std::byte> encode_dataset(const PatchDataset& ds);
PatchDataset decode_dataset(std::span<const std::byte> bytes);
void write_dataset(const PatchDataset& ds, const std::filesystem::path& path);
PatchDataset read_dataset(const std::filesystem::path& path);

}  // namespace polsar
