#include "polsar/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "binary_io.hpp"
#include "polsar/stats.hpp"

namespace polsar {

using detail::ByteReader;
using detail::ByteWriter;

namespace {

constexpr std::size_t kBandsOffset = 16;
constexpr std::size_t kDtypeOffset = 20;
constexpr std::size_t kKindOffset = 22;

const char* kind_name(RasterKind k) {
  switch (k) {
    case RasterKind::covariance: return "covariance";
    case RasterKind::intensity: return "intensity";
    case RasterKind::mask: return "mask";
    case RasterKind::real: return "real";
    case RasterKind::unspecified: break;
  }
  return "unspecified";
}

bool is_real(DType t) { return t == DType::f32 || t == DType::f64; }
bool is_complex(DType t) { return t == DType::c64 || t == DType::c128; }

void put_header(ByteWriter& w, const RasterHeader& h) {
  w.put_chars(std::string_view(RasterHeader::kMagic.data(), 4));
  w.put(h.version);
  w.put(h.height);
  w.put(h.width);
  w.put(h.bands);
  w.put(static_cast<std::uint8_t>(h.dtype));
  w.put(static_cast<std::uint8_t>(h.layout));
  w.put(static_cast<std::uint8_t>(h.kind));
  w.put(std::uint8_t{0});
}

RasterHeader make_header(std::size_t height, std::size_t width, std::uint32_t bands, DType dtype, RasterKind kind) {
  if (height == 0 || width == 0) throw InvalidArgument("raster must be at least 1x1");
  if (height > UINT32_MAX || width > UINT32_MAX) throw InvalidArgument("raster dimensions exceed u32");
  RasterHeader h;
  h.height = static_cast<std::uint32_t>(height);
  h.width = static_cast<std::uint32_t>(width);
  h.bands = bands;
  h.dtype = dtype;
  h.kind = kind;
  return h;
}

DType real_dtype(Precision p) { return p == Precision::f32 ? DType::f32 : DType::f64; }

void put_real(ByteWriter& w, DType t, double v) {
  if (t == DType::f32) {
    w.put(static_cast<float>(v));
  } else {
    w.put(v);
  }
}

double get_real(ByteReader& r, DType t) {
  return t == DType::f32 ? static_cast<double>(r.get<float>("sample")) : r.get<double>("sample");
}

void check_nonnegative(double v, const char* what, std::size_t idx) {
  if (!(v >= 0.0)) {
    throw InvalidArgument(std::string("refusing to write raster: ") + what + " is negative or NaN at pixel " +
                          std::to_string(idx));
  }
}

/// Reads header and validates payload length; leaves reader positioned at payload.
RasterHeader read_validated_header(ByteReader& r) {
  r.need(RasterHeader::kSize, "header");
  const auto magic = r.get_chars(4, "magic");
  if (magic != std::string_view(RasterHeader::kMagic.data(), 4)) {
    throw FormatError("bad magic: expected \"PSR1\"", 0);
  }
  RasterHeader h;
  h.version = r.get<std::uint32_t>("version");
  if (h.version != RasterHeader::kVersion) {
    throw FormatError("unsupported PSR1 version " + std::to_string(h.version), 4);
  }
  h.height = r.get<std::uint32_t>("height");
  h.width = r.get<std::uint32_t>("width");
  h.bands = r.get<std::uint32_t>("bands");
  if (h.height == 0) throw FormatError("height must be >= 1", 8);
  if (h.width == 0) throw FormatError("width must be >= 1", 12);
  if (h.bands == 0) throw FormatError("bands must be >= 1", kBandsOffset);
  const auto dtype = r.get<std::uint8_t>("dtype");
  if (dtype > static_cast<std::uint8_t>(DType::u8)) {
    throw FormatError("unknown dtype code " + std::to_string(dtype), kDtypeOffset);
  }
  h.dtype = static_cast<DType>(dtype);
  const auto layout = r.get<std::uint8_t>("layout");
  if (layout != 0) throw FormatError("unknown layout code " + std::to_string(layout), 21);
  const auto kind = r.get<std::uint8_t>("kind");
  if (kind > static_cast<std::uint8_t>(RasterKind::real)) {
    throw FormatError("unknown raster kind " + std::to_string(kind), kKindOffset);
  }
  h.kind = static_cast<RasterKind>(kind);
  r.get<std::uint8_t>("reserved");

  const auto expected = h.payload_bytes();
  if (r.remaining() != expected) {
    throw FormatError(std::string(r.remaining() < expected ? "truncated payload" : "trailing bytes after payload") +
                          ": expected " + std::to_string(expected) + " payload bytes, found " +
                          std::to_string(r.remaining()),
                      RasterHeader::kSize + std::min<std::uint64_t>(expected, r.remaining()));
  }
  return h;
}

void expect_kind(const RasterHeader& h, RasterKind wanted) {
  if (h.kind != RasterKind::unspecified && h.kind != wanted) {
    throw FormatError(std::string("raster holds ") + kind_name(h.kind) + " data, requested " + kind_name(wanted),
                      kKindOffset);
  }
}

C2Raster decode_c2_payload(ByteReader& r, const RasterHeader& h) {
  const std::size_t n = std::size_t{h.height} * h.width;
  C2Raster out(h.height, h.width);
  if (is_real(h.dtype)) {
    if (h.bands != 4) throw FormatError("covariance raster needs 4 real bands, found " + std::to_string(h.bands), kBandsOffset);
    for (std::size_t i = 0; i < n; ++i) out[i].c11 = get_real(r, h.dtype);
    for (std::size_t i = 0; i < n; ++i) out[i].c22 = get_real(r, h.dtype);
    for (std::size_t i = 0; i < n; ++i) out[i].c12.real(get_real(r, h.dtype));
    for (std::size_t i = 0; i < n; ++i) out[i].c12.imag(get_real(r, h.dtype));
  } else if (is_complex(h.dtype)) {
    if (h.bands != 3) throw FormatError("complex covariance raster needs 3 bands, found " + std::to_string(h.bands), kBandsOffset);
    const DType part = h.dtype == DType::c64 ? DType::f32 : DType::f64;
    auto get_c = [&] {
      const double re = get_real(r, part);
      const double im = get_real(r, part);
      return std::complex<double>(re, im);
    };
    for (std::size_t i = 0; i < n; ++i) out[i].c11 = get_c().real();
    for (std::size_t i = 0; i < n; ++i) out[i].c22 = get_c().real();
    for (std::size_t i = 0; i < n; ++i) out[i].c12 = get_c();
  } else {
    throw FormatError("covariance raster cannot have dtype u8", kDtypeOffset);
  }
  return out;
}

BandStack decode_bands_payload(ByteReader& r, const RasterHeader& h) {
  if (!is_real(h.dtype)) throw FormatError("intensity stack needs a real dtype", kDtypeOffset);
  if (h.bands != BandStack::kBands) {
    throw FormatError("intensity stack needs 4 bands, found " + std::to_string(h.bands), kBandsOffset);
  }
  BandStack out(h.height, h.width);
  for (std::size_t b = 0; b < BandStack::kBands; ++b) {
    for (auto& v : out.band(b)) v = get_real(r, h.dtype);
  }
  return out;
}

MaskImage decode_mask_payload(ByteReader& r, const RasterHeader& h) {
  if (h.dtype != DType::u8) throw FormatError("mask needs dtype u8", kDtypeOffset);
  if (h.bands != 1) throw FormatError("mask needs 1 band, found " + std::to_string(h.bands), kBandsOffset);
  MaskImage out(h.height, h.width);
  for (auto& v : out) v = r.get<std::uint8_t>("sample");
  return out;
}

RealImage decode_real_payload(ByteReader& r, const RasterHeader& h) {
  if (!is_real(h.dtype)) throw FormatError("real image needs a real dtype", kDtypeOffset);
  if (h.bands != 1) throw FormatError("real image needs 1 band, found " + std::to_string(h.bands), kBandsOffset);
  RealImage out(h.height, h.width);
  for (auto& v : out) v = get_real(r, h.dtype);
  return out;
}

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::c64: return 8;
    case DType::c128: return 16;
    case DType::u8: return 1;
  }
  throw InvalidArgument("unknown dtype");
}

std::uint64_t RasterHeader::payload_bytes() const {
  return std::uint64_t{height} * width * bands * dtype_size(dtype);
}

RasterHeader decode_header(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  return read_validated_header(r);
}

C2Raster decode_c2(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  const auto h = read_validated_header(r);
  expect_kind(h, RasterKind::covariance);
  return decode_c2_payload(r, h);
}

BandStack decode_band_stack(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  const auto h = read_validated_header(r);
  expect_kind(h, RasterKind::intensity);
  return decode_bands_payload(r, h);
}

MaskImage decode_mask(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  const auto h = read_validated_header(r);
  expect_kind(h, RasterKind::mask);
  return decode_mask_payload(r, h);
}

RealImage decode_real_image(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  const auto h = read_validated_header(r);
  expect_kind(h, RasterKind::real);
  return decode_real_payload(r, h);
}

AnyRaster decode_raster(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  const auto h = read_validated_header(r);
  switch (h.kind) {
    case RasterKind::covariance: return decode_c2_payload(r, h);
    case RasterKind::intensity: return decode_bands_payload(r, h);
    case RasterKind::mask: return decode_mask_payload(r, h);
    case RasterKind::real: return decode_real_payload(r, h);
    case RasterKind::unspecified: break;
  }
  if (h.dtype == DType::u8) return decode_mask_payload(r, h);
  if (is_complex(h.dtype)) return decode_c2_payload(r, h);
  if (h.bands == 1) return decode_real_payload(r, h);
  throw FormatError("raster kind unspecified and ambiguous for " + std::to_string(h.bands) + " real bands",
                    kKindOffset);
}

std::vector<std::byte> encode_raster(const C2Raster& r, Precision p) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    check_nonnegative(r[i].c11, "c11", i);
    check_nonnegative(r[i].c22, "c22", i);
  }
  const auto h = make_header(r.height(), r.width(), 4, real_dtype(p), RasterKind::covariance);
  ByteWriter w;
  w.reserve(RasterHeader::kSize + h.payload_bytes());
  put_header(w, h);
  for (const auto& c : r) put_real(w, h.dtype, c.c11);
  for (const auto& c : r) put_real(w, h.dtype, c.c22);
  for (const auto& c : r) put_real(w, h.dtype, c.c12.real());
  for (const auto& c : r) put_real(w, h.dtype, c.c12.imag());
  return w.take();
}

std::vector<std::byte> encode_raster(const BandStack& r, Precision p) {
  for (std::size_t b = 0; b < BandStack::kBands; ++b) {
    const auto& band = r.band(b);
    for (std::size_t i = 0; i < band.size(); ++i) check_nonnegative(band[i], "intensity sample", i);
  }
  const auto h = make_header(r.height(), r.width(), 4, real_dtype(p), RasterKind::intensity);
  ByteWriter w;
  w.reserve(RasterHeader::kSize + h.payload_bytes());
  put_header(w, h);
  for (std::size_t b = 0; b < BandStack::kBands; ++b) {
    for (double v : r.band(b)) put_real(w, h.dtype, v);
  }
  return w.take();
}

std::vector<std::byte> encode_raster(const MaskImage& r) {
  const auto h = make_header(r.height(), r.width(), 1, DType::u8, RasterKind::mask);
  ByteWriter w;
  w.reserve(RasterHeader::kSize + h.payload_bytes());
  put_header(w, h);
  for (auto v : r) w.put(static_cast<std::uint8_t>(v != 0));
  return w.take();
}

std::vector<std::byte> encode_raster(const RealImage& r, Precision p) {
  const auto h = make_header(r.height(), r.width(), 1, real_dtype(p), RasterKind::real);
  ByteWriter w;
  w.reserve(RasterHeader::kSize + h.payload_bytes());
  put_header(w, h);
  for (double v : r) put_real(w, h.dtype, v);
  return w.take();
}

RasterHeader read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<std::byte, RasterHeader::kSize> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  ByteReader r(std::span<const std::byte>(buf.data(), got));
  r.need(RasterHeader::kSize, "header");
  // Validate fields only; payload length is checked by the full readers.
  const auto magic = r.get_chars(4);
  if (magic != std::string_view(RasterHeader::kMagic.data(), 4)) throw FormatError("bad magic: expected \"PSR1\"", 0);
  RasterHeader h;
  h.version = r.get<std::uint32_t>();
  h.height = r.get<std::uint32_t>();
  h.width = r.get<std::uint32_t>();
  h.bands = r.get<std::uint32_t>();
  h.dtype = static_cast<DType>(r.get<std::uint8_t>());
  h.layout = static_cast<Layout>(r.get<std::uint8_t>());
  h.kind = static_cast<RasterKind>(r.get<std::uint8_t>());
  return h;
}

AnyRaster read_raster(const std::filesystem::path& path) { return decode_raster(detail::read_file(path)); }
C2Raster read_c2(const std::filesystem::path& path) { return decode_c2(detail::read_file(path)); }
BandStack read_band_stack(const std::filesystem::path& path) { return decode_band_stack(detail::read_file(path)); }
MaskImage read_mask(const std::filesystem::path& path) { return decode_mask(detail::read_file(path)); }
RealImage read_real_image(const std::filesystem::path& path) { return decode_real_image(detail::read_file(path)); }

void write_raster(const C2Raster& r, const std::filesystem::path& path, Precision p) {
  detail::write_file(path, encode_raster(r, p));
}
void write_raster(const BandStack& r, const std::filesystem::path& path, Precision p) {
  detail::write_file(path, encode_raster(r, p));
}
void write_raster(const MaskImage& r, const std::filesystem::path& path) { detail::write_file(path, encode_raster(r)); }
void write_raster(const RealImage& r, const std::filesystem::path& path, Precision p) {
  detail::write_file(path, encode_raster(r, p));
}

std::vector<float> to_flat(const C2Raster& r) {
  const std::size_t n = r.size();
  std::vector<float> out(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(r[i].c11);
    out[n + i] = static_cast<float>(r[i].c22);
    out[2 * n + i] = static_cast<float>(r[i].c12.real());
    out[3 * n + i] = static_cast<float>(r[i].c12.imag());
  }
  return out;
}

C2Raster c2_from_flat(std::size_t height, std::size_t width, std::span<const float> flat) {
  const std::size_t n = height * width;
  if (flat.size() != 4 * n) throw InvalidArgument("flat covariance array must hold 4*height*width values");
  C2Raster out(height, width);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].c11 = flat[i];
    out[i].c22 = flat[n + i];
    out[i].c12 = {flat[2 * n + i], flat[3 * n + i]};
  }
  return out;
}

std::vector<float> to_flat(const BandStack& r) {
  const std::size_t n = r.height() * r.width();
  std::vector<float> out(4 * n);
  for (std::size_t b = 0; b < 4; ++b) {
    const auto& band = r.band(b);
    for (std::size_t i = 0; i < n; ++i) out[b * n + i] = static_cast<float>(band[i]);
  }
  return out;
}

BandStack bands_from_flat(std::size_t height, std::size_t width, std::span<const float> flat) {
  const std::size_t n = height * width;
  if (flat.size() != 4 * n) throw InvalidArgument("flat band array must hold 4*height*width values");
  BandStack out(height, width);
  for (std::size_t b = 0; b < 4; ++b) {
    auto& band = out.band(b);
    for (std::size_t i = 0; i < n; ++i) band[i] = flat[b * n + i];
  }
  return out;
}

namespace {

/// Maps values through a 2-98 percentile stretch. A degenerate stretch (flat channel)
/// yields mid-gray for positive values and black otherwise.
std::vector<std::uint8_t> stretch_channel(const std::vector<double>& values) {
  const double pcts[] = {2.0, 98.0};
  const auto bounds = percentiles(values, pcts);
  const double lo = bounds[0];
  const double hi = bounds[1];
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = values[i];
    if (hi > lo) {
      const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
      out[i] = static_cast<std::uint8_t>(std::lround(t * 255.0));
    } else {
      out[i] = v > 0.0 ? 128 : 0;
    }
  }
  return out;
}

}  // namespace

Grid<Rgb> quicklook_rgb(const C2Raster& c2) {
  const std::size_t n = c2.size();
  if (n == 0) throw InvalidArgument("quicklook of an empty raster");
  std::vector<double> r(n), g(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = c2[i].c11;
    g[i] = c2[i].c22;
    b[i] = c2[i].c22 > 0.0 ? c2[i].c11 / c2[i].c22 : 0.0;
  }
  const auto rs = stretch_channel(r);
  const auto gs = stretch_channel(g);
  auto bs = stretch_channel(b);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(c2[i].c22 > 0.0)) bs[i] = 0;
  }
  Grid<Rgb> out(c2.height(), c2.width());
  for (std::size_t i = 0; i < n; ++i) out[i] = {rs[i], gs[i], bs[i]};
  return out;
}

void export_quicklook(const C2Raster& c2, const std::filesystem::path& path) {
  const auto rgb = quicklook_rgb(c2);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(rgb.width()), static_cast<png_uint_32>(rgb.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(rgb.width() * 3);
  for (std::size_t y = 0; y < rgb.height(); ++y) {
    for (std::size_t x = 0; x < rgb.width(); ++x) {
      const auto& px = rgb(y, x);
      row[3 * x] = px[0];
      row[3 * x + 1] = px[1];
      row[3 * x + 2] = px[2];
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void TemporalStack::validate(std::size_t min_epochs) const {
  if (epochs.size() < min_epochs) {
    throw InvalidArgument("temporal stack needs at least " + std::to_string(min_epochs) + " epochs, has " +
                          std::to_string(epochs.size()));
  }
  if (dates.size() != epochs.size()) {
    throw InvalidArgument("temporal stack has " + std::to_string(epochs.size()) + " epochs but " +
                          std::to_string(dates.size()) + " dates");
  }
  for (std::size_t i = 1; i < epochs.size(); ++i) require_same_shape(epochs[0], epochs[i], "temporal stack");
}

}  // namespace polsar
