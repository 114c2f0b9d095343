#include "polsar/transform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polsar/parallel.hpp"

namespace polsar {

IntensityQuad forward_transform(const Cov2& input, PsdPolicy policy) {
  Cov2 c = input;
  if (!is_psd(c)) {
    if (policy == PsdPolicy::reject) {
      throw InvalidArgument("covariance matrix is not positive semi-definite (c11=" + std::to_string(c.c11) +
                            ", c22=" + std::to_string(c.c22) + ", |c12|^2=" + std::to_string(std::norm(c.c12)) + ")");
    }
    c = project_psd(c);
  }
  const double span = c.c11 + c.c22;
  return {c.c11, span + 2.0 * c.c12.real(), span + 2.0 * c.c12.imag(), c.c22};
}

Cov2 inverse_transform(const IntensityQuad& q) {
  if (!(q.vv >= 0.0 && q.i >= 0.0 && q.q >= 0.0 && q.vh >= 0.0)) {
    throw InvalidArgument("inverse transform needs nonnegative intensities");
  }
  const double span = q.span();
  return {q.vv, q.vh, {0.5 * (q.i - span), 0.5 * (q.q - span)}};
}

Cov2 project_psd(const Cov2& c) {
  Cov2 out = c;
  if (!(out.c11 >= 0.0)) out.c11 = 0.0;
  if (!(out.c22 >= 0.0)) out.c22 = 0.0;
  const double bound = out.c11 * out.c22;
  const double mag2 = std::norm(out.c12);
  if (mag2 > bound) {
    out.c12 = bound > 0.0 ? out.c12 * std::sqrt(bound / mag2) : std::complex<double>{0.0, 0.0};
    // rounding can leave |c12|^2 a few ulps above the bound; nudge inward so a second pass is a no-op
    while (std::norm(out.c12) > bound) out.c12 *= 1.0 - 0x1.0p-52;
  }
  return out;
}

BandStack transform_raster(const C2Raster& c2, PsdPolicy policy, TransformReport* report) {
  BandStack out(c2.height(), c2.width());
  std::size_t projected = 0;
  for (std::size_t idx = 0; idx < c2.size(); ++idx) {
    if (policy == PsdPolicy::project && !is_psd(c2[idx])) ++projected;
    const auto q = forward_transform(c2[idx], policy);
    out.band(Band::vv)[idx] = q.vv;
    out.band(Band::i)[idx] = q.i;
    out.band(Band::q)[idx] = q.q;
    out.band(Band::vh)[idx] = q.vh;
  }
  if (report) report->projected_pixels += projected;
  return out;
}

C2Raster untransform_raster(const BandStack& bands, bool repair_psd, TransformReport* report) {
  for (std::size_t b = 1; b < BandStack::kBands; ++b) require_same_shape(bands.band(0), bands.band(b), "band stack");
  C2Raster out(bands.height(), bands.width());
  std::size_t clamped = 0;
  std::size_t projected = 0;
  auto clamp = [&](double v) {
    if (v >= 0.0) return v;
    ++clamped;
    return 0.0;
  };
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    IntensityQuad q{clamp(bands.band(Band::vv)[idx]), clamp(bands.band(Band::i)[idx]),
                    clamp(bands.band(Band::q)[idx]), clamp(bands.band(Band::vh)[idx])};
    Cov2 c = inverse_transform(q);
    if (repair_psd) {
      const Cov2 fixed = project_psd(c);
      if (!(fixed == c)) ++projected;
      c = fixed;
    }
    out[idx] = c;
  }
  if (report) {
    report->clamped_samples += clamped;
    report->projected_pixels += projected;
  }
  return out;
}

C2Raster boxcar_multilook(const C2Raster& c2, std::size_t win_az, std::size_t win_rg) {
  if (win_az == 0 || win_rg == 0) throw InvalidArgument("multilook window must be at least 1x1");
  if (win_az > c2.height() || win_rg > c2.width()) {
    throw InvalidArgument("multilook window " + std::to_string(win_az) + "x" + std::to_string(win_rg) +
                          " larger than image " + std::to_string(c2.height()) + "x" + std::to_string(c2.width()));
  }
  const std::size_t h = c2.height();
  const std::size_t w = c2.width();
  const std::ptrdiff_t before_az = static_cast<std::ptrdiff_t>((win_az - 1) / 2);
  const std::ptrdiff_t after_az = static_cast<std::ptrdiff_t>(win_az / 2);
  const std::ptrdiff_t before_rg = static_cast<std::ptrdiff_t>((win_rg - 1) / 2);
  const std::ptrdiff_t after_rg = static_cast<std::ptrdiff_t>(win_rg / 2);

  // Range pass: row-wise means. The in-image window is a rectangle, so the
  // azimuth pass over these means gives the exact mean of the 2-D subset.
  C2Raster rows(h, w);
  parallel_for(h, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(c) - before_rg));
        const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1,
                                                                          static_cast<std::ptrdiff_t>(c) + after_rg));
        Cov2 acc;
        for (std::size_t k = lo; k <= hi; ++k) acc += c2(r, k);
        rows(r, c) = acc * (1.0 / static_cast<double>(hi - lo + 1));
      }
    }
  });
  C2Raster out(h, w);
  parallel_for(h, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(r) - before_az));
      const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h) - 1,
                                                                        static_cast<std::ptrdiff_t>(r) + after_az));
      const double inv = 1.0 / static_cast<double>(hi - lo + 1);
      for (std::size_t c = 0; c < w; ++c) {
        Cov2 acc;
        for (std::size_t k = lo; k <= hi; ++k) acc += rows(k, c);
        out(r, c) = acc * inv;
      }
    }
  });
  return out;
}

C2Raster temporal_average(const TemporalStack& stack) {
  if (stack.epochs.empty()) throw InvalidArgument("temporal average of an empty stack");
  for (std::size_t i = 1; i < stack.epochs.size(); ++i) {
    require_same_shape(stack.epochs[0], stack.epochs[i], "temporal average");
  }
  C2Raster out(stack.height(), stack.width());
  const double inv = 1.0 / static_cast<double>(stack.epochs.size());
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    Cov2 acc;
    for (const auto& e : stack.epochs) acc += e[idx];
    out[idx] = acc * inv;
  }
  return out;
}

RealImage span_image(const C2Raster& c2) {
  RealImage out(c2.height(), c2.width());
  for (std::size_t i = 0; i < c2.size(); ++i) out[i] = c2[i].trace();
  return out;
}

}  // namespace polsar
