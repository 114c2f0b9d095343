#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "polsar/raster.hpp"

namespace polsar {

/// Sample type codes of the PSR1 format.
enum class DType : std::uint8_t { f32 = 0, f64 = 1, c64 = 2, c128 = 3, u8 = 4 };

enum class Layout : std::uint8_t { band_sequential = 0 };

/// What a PSR1 file holds. Stored in the first reserved header byte; 0 means unspecified.
enum class RasterKind : std::uint8_t { unspecified = 0, covariance = 1, intensity = 2, mask = 3, real = 4 };

std::size_t dtype_size(DType t);

/// Fixed 24-byte PSR1 header:
///   0  magic "PSR1"      4  u32 version     8  u32 height    12 u32 width
///   16 u32 bands         20 u8 dtype        21 u8 layout     22 u8 kind   23 u8 reserved
struct RasterHeader {
  static constexpr std::array<char, 4> kMagic{'P', 'S', 'R', '1'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kSize = 24;

  std::uint32_t version = kVersion;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t bands = 0;
  DType dtype = DType::f64;
  Layout layout = Layout::band_sequential;
  RasterKind kind = RasterKind::unspecified;

  /// Bytes of sample payload following the header.
  std::uint64_t payload_bytes() const;
  friend bool operator==(const RasterHeader&, const RasterHeader&) = default;
};

using AnyRaster = std::variant<C2Raster, BandStack, MaskImage, RealImage>;

/// Precision used for real-valued payloads on write.
enum class Precision { f32, f64 };

// Decoding from memory; all throw FormatError with the failing byte offset.
RasterHeader decode_header(std::span<const std::byte> bytes);
AnyRaster decode_raster(std::span<const std::byte> bytes);
C2Raster decode_c2(std::span<const std::byte> bytes);
BandStack decode_band_stack(std::span<const std::byte> bytes);
MaskImage decode_mask(std::span<const std::byte> bytes);
RealImage decode_real_image(std::span<const std::byte> bytes);

// Encoding refuses invariant violations (negative intensities) with InvalidArgument.
std::vector<std::byte> encode_raster(const C2Raster& r, Precision p = Precision::f64);
std::vector<std::byte> encode_raster(const BandStack& r, Precision p = Precision::f64);
std::vector<std::byte> encode_raster(const MaskImage& r);
std::vector<std::byte> encode_raster(const RealImage& r, Precision p = Precision::f64);

RasterHeader read_header(const std::filesystem::path& path);
AnyRaster read_raster(const std::filesystem::path& path);
C2Raster read_c2(const std::filesystem::path& path);
BandStack read_band_stack(const std::filesystem::path& path);
MaskImage read_mask(const std::filesystem::path& path);
RealImage read_real_image(const std::filesystem::path& path);

void write_raster(const C2Raster& r, const std::filesystem::path& path, Precision p = Precision::f64);
void write_raster(const BandStack& r, const std::filesystem::path& path, Precision p = Precision::f64);
void write_raster(const MaskImage& r, const std::filesystem::path& path);
void write_raster(const RealImage& r, const std::filesystem::path& path, Precision p = Precision::f64);

// Interop with flat band-sequential float arrays (c11, c22, Re c12, Im c12 for covariance).
std::vector<float> to_flat(const C2Raster& r);
C2Raster c2_from_flat(std::size_t height, std::size_t width, std::span<const float> flat);
std::vector<float> to_flat(const BandStack& r);
BandStack bands_from_flat(std::size_t height, std::size_t width, std::span<const float> flat);

using Rgb = std::array<std::uint8_t, 3>;

/// False-colour composite R = c11, G = c22, B = c11/c22, each channel clipped to its
/// 2nd-98th percentile and scaled to 0..255. Pixels with c22 = 0 get B = 0.
Grid<Rgb> quicklook_rgb(const C2Raster& c2);

/// Writes quicklook_rgb(c2) as an 8-bit RGB PNG.
void export_quicklook(const C2Raster& c2, const std::filesystem::path& path);

}  // namespace polsar
