#include "polsar/speckle_sim.hpp"

#include <chrono>
#include <cstdio>
#include <string>

#include "polsar/parallel.hpp"

namespace polsar {
namespace {

struct Cholesky2 {
  double l11 = 0.0;
  std::complex<double> l21;
  double l22 = 0.0;
};

Cholesky2 cholesky(const Cov2& t) {
  if (!is_psd(t)) throw InvalidArgument("truth covariance is not positive semi-definite");
  Cholesky2 f;
  const double c11 = std::max(t.c11, 0.0);
  const double c22 = std::max(t.c22, 0.0);
  f.l11 = std::sqrt(c11);
  f.l21 = f.l11 > 0.0 ? std::conj(t.c12) / f.l11 : std::complex<double>{};
  f.l22 = std::sqrt(std::max(c22 - std::norm(f.l21), 0.0));
  return f;
}

Cov2 draw(const Cholesky2& f, Rng& rng) {
  const auto z1 = rng.complex_gaussian();
  const auto z2 = rng.complex_gaussian();
  const std::complex<double> s1 = f.l11 * z1;
  const std::complex<double> s2 = f.l21 * z1 + f.l22 * z2;
  return {std::norm(s1), std::norm(s2), s1 * std::conj(s2)};
}

bool valid_truth(const Cov2& t) {
  const bool diagonal = t.c12 == std::complex<double>{};
  if (diagonal) return t.c11 > 0.0 && t.c22 > 0.0;
  return t.c11 > 0.0 && t.c22 > 0.0 && std::norm(t.c12) < t.c11 * t.c22;
}

}  // namespace

Cov2 sample_single_look(const Cov2& truth, Rng& rng) { return draw(cholesky(truth), rng); }

Cov2 sample_multilook(const Cov2& truth, std::size_t looks, Rng& rng) {
  if (looks == 0) throw InvalidArgument("looks must be >= 1");
  const auto f = cholesky(truth);
  Cov2 acc;
  for (std::size_t l = 0; l < looks; ++l) acc += draw(f, rng);
  return acc * (1.0 / static_cast<double>(looks));
}

void SceneSpec::validate() const {
  if (height == 0 || width == 0) throw InvalidArgument("scene must be at least 1x1");
  Grid<std::uint8_t> covered(height, width, 0);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& reg = regions[i];
    if (!reg.rect.fits(height, width) || reg.rect.height == 0 || reg.rect.width == 0) {
      throw InvalidArgument("scene region " + std::to_string(i) + " is empty or outside the image");
    }
    if (!valid_truth(reg.truth)) throw InvalidArgument("scene region " + std::to_string(i) + " truth is not positive definite");
    for (std::size_t r = reg.rect.row0; r < reg.rect.row0 + reg.rect.height; ++r) {
      for (std::size_t c = reg.rect.col0; c < reg.rect.col0 + reg.rect.width; ++c) covered(r, c) = 1;
    }
  }
  if (labels) {
    if (labels->height() != height || labels->width() != width) throw InvalidArgument("label map geometry mismatch");
    for (std::size_t i = 0; i < label_truths.size(); ++i) {
      if (!valid_truth(label_truths[i])) throw InvalidArgument("label truth " + std::to_string(i) + " is not positive definite");
    }
    for (std::size_t i = 0; i < labels->size(); ++i) {
      if ((*labels)[i] >= label_truths.size()) throw InvalidArgument("label map references undefined label");
      covered[i] = 1;
    }
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) {
      throw InvalidArgument("scene regions do not cover pixel (" + std::to_string(i / width) + ", " +
                            std::to_string(i % width) + ")");
    }
  }
  for (const auto& p : points) {
    if (p.row >= height || p.col >= width) throw InvalidArgument("point target outside the image");
    if (!is_psd(p.amplitude) || p.amplitude.c11 < 0.0 || p.amplitude.c22 < 0.0) {
      throw InvalidArgument("point target amplitude is not positive semi-definite");
    }
  }
}

C2Raster SceneSpec::truth() const {
  validate();
  C2Raster out(height, width);
  if (labels) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = label_truths[(*labels)[i]];
  }
  for (const auto& reg : regions) {
    for (std::size_t r = reg.rect.row0; r < reg.rect.row0 + reg.rect.height; ++r) {
      for (std::size_t c = reg.rect.col0; c < reg.rect.col0 + reg.rect.width; ++c) out(r, c) = reg.truth;
    }
  }
  for (const auto& p : points) out(p.row, p.col) += p.amplitude;
  return out;
}

void ChangeScript::validate(std::size_t height, std::size_t width) const {
  if (epochs < 1) throw InvalidArgument("change script needs at least one epoch");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.epoch >= epochs) throw InvalidArgument("change event " + std::to_string(i) + " epoch out of range");
    if (!e.region.fits(height, width)) throw InvalidArgument("change event " + std::to_string(i) + " region outside the image");
    if (!valid_truth(e.truth)) throw InvalidArgument("change event " + std::to_string(i) + " truth is not positive definite");
  }
}

C2Raster simulate_from_truth(const C2Raster& truth, std::uint64_t seed, std::size_t epoch, std::size_t looks) {
  C2Raster out(truth.height(), truth.width());
  const std::size_t w = truth.width();
  parallel_for(truth.height(), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        Rng rng(substream(seed, {r, c, epoch}));
        out(r, c) = looks == 1 ? sample_single_look(truth(r, c), rng) : sample_multilook(truth(r, c), looks, rng);
      }
    }
  });
  return out;
}

C2Raster simulate_scene(const SceneSpec& spec, std::uint64_t seed, std::size_t epoch) {
  return simulate_from_truth(spec.truth(), seed, epoch);
}

SimulatedStack simulate_stack(const SceneSpec& spec, const ChangeScript& script, std::uint64_t seed,
                              const std::string& start_date, int interval_days) {
  script.validate(spec.height, spec.width);
  const C2Raster base = spec.truth();
  SimulatedStack out;
  out.change_truth = MaskImage(spec.height, spec.width, 0);
  C2Raster current = base;
  for (std::size_t e = 0; e < script.epochs; ++e) {
    for (const auto& ev : script.events) {
      if (ev.epoch != e) continue;
      for (std::size_t r = ev.region.row0; r < ev.region.row0 + ev.region.height; ++r) {
        for (std::size_t c = ev.region.col0; c < ev.region.col0 + ev.region.width; ++c) current(r, c) = ev.truth;
      }
    }
    out.truths.push_back(current);
    out.stack.epochs.push_back(simulate_from_truth(current, seed, e));
    out.stack.dates.push_back(add_days(start_date, static_cast<int>(e) * interval_days));
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t e = 1; e < out.truths.size(); ++e) {
      if (!(out.truths[e][i] == out.truths[0][i])) {
        out.change_truth[i] = 1;
        break;
      }
    }
  }
  return out;
}

std::string add_days(const std::string& iso, int days) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (std::sscanf(iso.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw InvalidArgument("bad ISO date: " + iso);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InvalidArgument("bad ISO date: " + iso);
  const std::chrono::year_month_day next{std::chrono::sys_days{ymd} + std::chrono::days{days}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(next.year()), static_cast<unsigned>(next.month()),
                static_cast<unsigned>(next.day()));
  return buf;
}

}  // namespace polsar
