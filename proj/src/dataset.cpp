#include "polsar/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "polsar/rng.hpp"
#include "polsar/stats.hpp"
#include "polsar/transform.hpp"

namespace polsar {

using detail::ByteReader;
using detail::ByteWriter;

void NormStats::validate() const {
  for (std::size_t b = 0; b < 4; ++b) {
    if (!(x_max[b] > x_min[b])) {
      throw InvalidArgument("degenerate normalization for band " + std::to_string(b) + ": x_max (" +
                            std::to_string(x_max[b]) + ") <= x_min (" + std::to_string(x_min[b]) + ")");
    }
  }
}

NormStats compute_norm_stats(std::span<const BandStack> stacks, double lo_pct, double hi_pct) {
  if (stacks.empty()) throw InvalidArgument("normalization statistics need at least one band stack");
  if (!(lo_pct < hi_pct)) throw InvalidArgument("lo percentile must be below hi percentile");
  NormStats out;
  for (std::size_t b = 0; b < 4; ++b) {
    std::vector<double> samples;
    for (const auto& s : stacks) samples.insert(samples.end(), s.band(b).begin(), s.band(b).end());
    const double pcts[] = {lo_pct, hi_pct};
    const auto v = percentiles(std::move(samples), pcts);
    out.x_min[b] = v[0];
    out.x_max[b] = v[1];
  }
  out.validate();
  return out;
}

BandStack normalize(const BandStack& x, const NormStats& norm, ClipCounts* clips) {
  norm.validate();
  BandStack out(x.height(), x.width());
  ClipCounts local;
  for (std::size_t b = 0; b < 4; ++b) {
    const double lo = norm.x_min[b];
    const double range = norm.x_max[b] - lo;
    const auto& src = x.band(b);
    auto& dst = out.band(b);
    for (std::size_t i = 0; i < src.size(); ++i) {
      double v = (src[i] - lo) / range;
      if (v < 0.0) {
        v = 0.0;
        ++local.below;
      } else if (v > 1.0) {
        v = 1.0;
        ++local.above;
      }
      dst[i] = v;
    }
  }
  if (clips) {
    clips->below += local.below;
    clips->above += local.above;
  }
  return out;
}

BandStack denormalize(const BandStack& x, const NormStats& norm) {
  norm.validate();
  BandStack out(x.height(), x.width());
  for (std::size_t b = 0; b < 4; ++b) {
    const double range = norm.x_max[b] - norm.x_min[b];
    const auto& src = x.band(b);
    auto& dst = out.band(b);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * range + norm.x_min[b];
  }
  return out;
}

double footprint_change_ratio(const MaskImage& mask, std::size_t row, std::size_t col, std::size_t patch) {
  if (mask.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t r = row; r < row + patch; ++r) {
    for (std::size_t c = col; c < col + patch; ++c) changed += mask(r, c) != 0;
  }
  return static_cast<double>(changed) / static_cast<double>(patch * patch);
}

namespace {

/// Summed-area table for O(1) footprint counts.
class MaskIntegral {
 public:
  explicit MaskIntegral(const MaskImage& mask) : w_(mask.width() + 1), sum_((mask.height() + 1) * w_, 0) {
    for (std::size_t r = 0; r < mask.height(); ++r) {
      for (std::size_t c = 0; c < mask.width(); ++c) {
        sum_[(r + 1) * w_ + c + 1] =
            (mask(r, c) != 0) + sum_[r * w_ + c + 1] + sum_[(r + 1) * w_ + c] - sum_[r * w_ + c];
      }
    }
  }
  std::size_t count(std::size_t r, std::size_t c, std::size_t h, std::size_t w) const {
    return sum_[(r + h) * w_ + c + w] - sum_[r * w_ + c + w] - sum_[(r + h) * w_ + c] + sum_[r * w_ + c];
  }

 private:
  std::size_t w_;
  std::vector<std::size_t> sum_;
};

void copy_patch(const BandStack& src, std::size_t row, std::size_t col, std::size_t patch, std::vector<float>& dst) {
  dst.resize(4 * patch * patch);
  for (std::size_t b = 0; b < 4; ++b) {
    const auto& band = src.band(b);
    for (std::size_t r = 0; r < patch; ++r) {
      for (std::size_t c = 0; c < patch; ++c) {
        dst[(b * patch + r) * patch + c] = static_cast<float>(band(row + r, col + c));
      }
    }
  }
}

}  // namespace

PatchDataset sample_patches(const TemporalStack& stack, const C2Raster& reference, const MaskImage& mask,
                            const NormStats& norm, const SamplingOptions& opts, SamplingReport* report) {
  stack.validate(1);
  require_same_shape(stack.epochs[0], reference, "sample_patches reference");
  if (!mask.empty()) require_same_shape(stack.epochs[0], mask, "sample_patches mask");
  norm.validate();
  const std::size_t h = stack.height();
  const std::size_t w = stack.width();
  if (opts.patch == 0 || opts.patch > std::min(h, w)) {
    throw InvalidArgument("patch size " + std::to_string(opts.patch) + " does not fit a " + std::to_string(h) + "x" +
                          std::to_string(w) + " raster");
  }
  if (opts.count == 0) throw InvalidArgument("patch count must be positive");

  SamplingReport local;
  const BandStack clean_bands = normalize(transform_raster(reference, PsdPolicy::project), norm, &local.clips);
  std::vector<BandStack> noisy_bands;
  noisy_bands.reserve(stack.size());
  for (const auto& e : stack.epochs) noisy_bands.push_back(normalize(transform_raster(e, PsdPolicy::project), norm, &local.clips));

  const MaskIntegral integral(mask.empty() ? MaskImage(h, w, 0) : mask);
  const std::size_t area = opts.patch * opts.patch;
  const std::size_t budget = opts.count * opts.attempts_per_patch;
  const std::size_t rows = h - opts.patch + 1;
  const std::size_t cols = w - opts.patch + 1;

  PatchDataset ds;
  ds.norm = norm;
  ds.patch_size = opts.patch;
  ds.pairs.reserve(opts.count);
  for (std::size_t draw = 0; draw < budget && ds.pairs.size() < opts.count; ++draw) {
    Rng rng(substream(opts.seed, {opts.stack_id, draw}));
    const auto epoch = static_cast<std::size_t>(rng.below(stack.size()));
    const auto row = static_cast<std::size_t>(rng.below(rows));
    const auto col = static_cast<std::size_t>(rng.below(cols));
    ++local.attempts;
    const double ratio = static_cast<double>(integral.count(row, col, opts.patch, opts.patch)) / static_cast<double>(area);
    if (!(ratio < opts.max_change_ratio)) continue;
    PatchPair pair;
    copy_patch(noisy_bands[epoch], row, col, opts.patch, pair.noisy);
    copy_patch(clean_bands, row, col, opts.patch, pair.clean);
    pair.provenance = {opts.stack_id, static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(row),
                       static_cast<std::uint32_t>(col)};
    pair.change_ratio = static_cast<float>(ratio);
    ds.pairs.push_back(std::move(pair));
  }
  local.accepted = ds.pairs.size();
  if (report) *report = local;
  if (ds.pairs.size() < opts.count) {
    throw Error("patch sampling exhausted its budget of " + std::to_string(budget) + " draws with only " +
                std::to_string(ds.pairs.size()) + " of " + std::to_string(opts.count) +
                " patches accepted (acceptance rate " + std::to_string(local.acceptance_rate()) + ")");
  }
  return ds;
}

namespace {
constexpr char kDatasetMagic[] = "PSD1";
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

std::vector<std::byte> encode_dataset(const PatchDataset& ds) {
  const std::size_t n = ds.pair_floats();
  ByteWriter w;
  w.reserve(64 + ds.pairs.size() * (20 + 8 * n));
  w.put_chars(std::string_view(kDatasetMagic, 4));
  w.put(kDatasetVersion);
  w.put(static_cast<std::uint32_t>(ds.pairs.size()));
  w.put(static_cast<std::uint32_t>(ds.patch_size));
  w.put(static_cast<std::uint32_t>(ds.channels()));
  for (double v : ds.norm.x_min) w.put(v);
  for (double v : ds.norm.x_max) w.put(v);
  w.put_string(ds.source_digest);
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& p = ds.pairs[i];
    if (p.noisy.size() != n || p.clean.size() != n) {
      throw InvalidArgument("pair " + std::to_string(i) + " does not match the dataset patch size");
    }
    w.put(p.provenance.stack_id);
    w.put(p.provenance.epoch);
    w.put(p.provenance.row);
    w.put(p.provenance.col);
    w.put(p.change_ratio);
    for (float v : p.noisy) w.put(v);
    for (float v : p.clean) w.put(v);
  }
  return w.take();
}

PatchDataset decode_dataset(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  if (r.get_chars(4, "magic") != std::string_view(kDatasetMagic, 4)) throw FormatError("bad magic: expected \"PSD1\"", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kDatasetVersion) throw FormatError("unsupported PSD1 version " + std::to_string(version), 4);
  const auto count = r.get<std::uint32_t>("pair count");
  PatchDataset ds;
  ds.patch_size = r.get<std::uint32_t>("patch size");
  const auto channels_at = r.offset();
  const auto channels = r.get<std::uint32_t>("channels");
  if (channels != 4) throw FormatError("dataset must have 4 channels, found " + std::to_string(channels), channels_at);
  if (ds.patch_size == 0) throw FormatError("patch size must be positive", channels_at - 4);
  for (auto& v : ds.norm.x_min) v = r.get<double>("norm stats");
  for (auto& v : ds.norm.x_max) v = r.get<double>("norm stats");
  ds.source_digest = r.get_string("digest");
  const std::size_t n = ds.pair_floats();
  const std::size_t pair_bytes = 20 + 8 * n;
  // count is untrusted until the payload is seen, so never preallocate beyond what the bytes can hold
  ds.pairs.resize(std::min<std::size_t>(count, r.remaining() / pair_bytes + 1));
  for (std::size_t i = 0; i < count; ++i) {
    if (r.remaining() < pair_bytes) {
      throw FormatError("truncated dataset at pair " + std::to_string(i) + " of " + std::to_string(count) +
                            ": expected " + std::to_string(pair_bytes) + " bytes, found " + std::to_string(r.remaining()),
                        r.offset());
    }
    auto& p = ds.pairs[i];
    p.provenance.stack_id = r.get<std::uint32_t>();
    p.provenance.epoch = r.get<std::uint32_t>();
    p.provenance.row = r.get<std::uint32_t>();
    p.provenance.col = r.get<std::uint32_t>();
    p.change_ratio = r.get<float>();
    p.noisy.resize(n);
    p.clean.resize(n);
    for (auto& v : p.noisy) v = r.get<float>();
    for (auto& v : p.clean) v = r.get<float>();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last pair", r.offset());
  return ds;
}

void write_dataset(const PatchDataset& ds, const std::filesystem::path& path) {
  detail::write_file(path, encode_dataset(ds));
}

PatchDataset read_dataset(const std::filesystem::path& path) { return decode_dataset(detail::read_file(path)); }

}  // namespace polsar
