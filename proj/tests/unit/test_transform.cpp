#include <doctest.h>

#include "helpers.hpp"
#include "polsar/metrics.hpp"
#include "polsar/speckle_sim.hpp"
#include "polsar/transform.hpp"

using namespace polsar;
using testing::rel_err;

namespace {

double matrix_rel_err(const Cov2& got, const Cov2& want) {
  const double scale = want.c11 + want.c22;
  return (std::abs(got.c11 - want.c11) + std::abs(got.c22 - want.c22) + std::abs(got.c12 - want.c12)) / scale;
}

bool quad_near(const IntensityQuad& a, const IntensityQuad& b, double tol = 1e-12) {
  return std::abs(a.vv - b.vv) < tol && std::abs(a.i - b.i) < tol && std::abs(a.q - b.q) < tol &&
         std::abs(a.vh - b.vh) < tol;
}

}  // namespace

TEST_SUITE("transform") {
  TEST_CASE("forward transform examples") {
    CHECK(forward_transform(Cov2{1, 0, {0, 0}}) == IntensityQuad{1, 1, 1, 0});
    CHECK(forward_transform(Cov2{1, 1, {1, 0}}) == IntensityQuad{1, 4, 2, 1});
    CHECK(quad_near(forward_transform(Cov2{1, 1, {0.3, 0.4}}), IntensityQuad{1, 2.6, 2.8, 1}));
  }

  TEST_CASE("forward transform agrees with intensities of simulated scattering vectors") {
    // E|S_vv + S_vh|^2 and E|S_vv + j S_vh|^2 for s = L z with L L^H = C.
    const Cov2 c{1, 1, {0.3, 0.4}};
    const double l11 = 1.0;
    const std::complex<double> l21 = std::conj(c.c12) / l11;
    const double l22 = std::sqrt(c.c22 - std::norm(l21));
    Rng rng(5);
    const int n = 400000;
    double si = 0, sq = 0;
    for (int k = 0; k < n; ++k) {
      const auto z1 = rng.complex_gaussian();
      const auto z2 = rng.complex_gaussian();
      const std::complex<double> vv = l11 * z1;
      const std::complex<double> vh = l21 * z1 + l22 * z2;
      si += std::norm(vv + vh);
      sq += std::norm(vv + std::complex<double>(0, 1) * vh);
    }
    // c12 = E{S_vv conj(S_vh)} here, matching the stored convention.
    CHECK(si / n == doctest::Approx(2.6).epsilon(0.01));
    CHECK(sq / n == doctest::Approx(2.8).epsilon(0.01));
  }

  TEST_CASE("inverse transform examples") {
    CHECK(inverse_transform({1, 4, 2, 1}) == Cov2{1, 1, {1, 0}});
    const Cov2 c = inverse_transform({1, 2.6, 2.8, 1});
    CHECK(std::abs(c.c12 - std::complex<double>(0.3, 0.4)) < 1e-15);
    CHECK(inverse_transform({1, 1, 1, 0}).c12 == std::complex<double>(0, 0));
    CHECK_THROWS_AS(inverse_transform({1, -0.1, 1, 1}), InvalidArgument);
  }

  TEST_CASE("property: round trip over random PSD matrices") {
    Rng rng(17);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const Cov2 c = testing::random_psd(rng);
      worst = std::max(worst, matrix_rel_err(inverse_transform(forward_transform(c)), c));
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("property: valid matrices map to nonnegative intensities") {
    Rng rng(18);
    for (int k = 0; k < 10000; ++k) {
      Cov2 c = testing::random_psd(rng);
      if (k % 2) {
        // rank one, the boundary of the PSD cone
        const auto a = rng.complex_gaussian();
        const auto b = rng.complex_gaussian();
        c = Cov2{std::norm(a), std::norm(b), a * std::conj(b)};
      }
      const IntensityQuad q = forward_transform(c);
      const double tol = 1e-12 * c.trace();
      CHECK(q.vv >= -tol);
      CHECK(q.i >= -tol);
      CHECK(q.q >= -tol);
      CHECK(q.vh >= -tol);
    }
  }

  TEST_CASE("non-PSD input is reported or projected") {
    const Cov2 bad{1, 1, {2, 0}};
    CHECK_THROWS_AS(forward_transform(bad), InvalidArgument);
    const IntensityQuad q = forward_transform(bad, PsdPolicy::project);
    CHECK(quad_near(q, forward_transform(Cov2{1, 1, {1, 0}})));
  }

  TEST_CASE("project_psd examples and idempotence") {
    const Cov2 valid{2, 3, {0.5, -0.7}};
    CHECK(project_psd(valid) == valid);
    CHECK(project_psd(Cov2{1, 1, {2, 0}}).c12 == std::complex<double>(1, 0));
    CHECK(project_psd(Cov2{0, 1, {0, 0.1}}).c12 == std::complex<double>(0, 0));
    const Cov2 neg = project_psd(Cov2{-1, 2, {1, 1}});
    CHECK(neg.c11 == 0.0);
    CHECK(is_psd(neg));
    Rng rng(21);
    for (int k = 0; k < 2000; ++k) {
      Cov2 c{rng.gaussian(), rng.gaussian(), {3 * rng.gaussian(), 3 * rng.gaussian()}};
      const Cov2 p = project_psd(c);
      CHECK(is_psd(p));
      CHECK(project_psd(p) == p);
      if (std::abs(c.c12) > 0 && p.c11 > 0 && p.c22 > 0) {
        // phase kept
        CHECK(std::abs(std::arg(p.c12) - std::arg(c.c12)) < 1e-12);
      }
    }
  }

  TEST_CASE("raster round trip and scalar consistency") {
    const C2Raster r = testing::random_c2(6, 5, 31);
    const BandStack bs = transform_raster(r);
    const C2Raster back = untransform_raster(bs);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(matrix_rel_err(back[i], r[i]) < 1e-12);

    C2Raster one(1, 1, Cov2{1, 1, {0.3, 0.4}});
    const BandStack b1 = transform_raster(one);
    CHECK(b1.band(Band::i)(0, 0) == doctest::Approx(2.6));
    CHECK(b1.band(Band::q)(0, 0) == doctest::Approx(2.8));
  }

  TEST_CASE("negative band samples are clamped and counted") {
    BandStack bs = transform_raster(C2Raster(2, 2, Cov2{1, 1, {0, 0}}));
    bs.band(Band::vh)(1, 1) = -0.25;
    TransformReport rep;
    const C2Raster c = untransform_raster(bs, false, &rep);
    CHECK(rep.clamped_samples == 1);
    CHECK(c(1, 1).c22 == 0.0);
  }

  TEST_CASE("untransform with PSD repair yields valid matrices") {
    BandStack bs(1, 1);
    bs.band(Band::vv)(0, 0) = 1;
    bs.band(Band::vh)(0, 0) = 1;
    bs.band(Band::i)(0, 0) = 6;  // implies Re c12 = 2, beyond sqrt(c11 c22)
    bs.band(Band::q)(0, 0) = 2;
    TransformReport rep;
    const C2Raster c = untransform_raster(bs, true, &rep);
    CHECK(rep.projected_pixels == 1);
    CHECK(is_psd(c(0, 0)));
    CHECK_FALSE(is_psd(untransform_raster(bs, false)(0, 0)));
  }

  TEST_CASE("boxcar examples") {
    const Cov2 v{2, 1, {0.5, 0.25}};
    const C2Raster flat(9, 11, v);
    const C2Raster m = boxcar_multilook(flat, 3, 5);
    for (const auto& px : m.pixels()) CHECK(matrix_rel_err(px, v) < 1e-15);

    const C2Raster r = testing::random_c2(5, 6, 3);
    CHECK(boxcar_multilook(r, 1, 1) == r);

    C2Raster delta(5, 5);
    delta(2, 2).c11 = 9;
    const C2Raster d = boxcar_multilook(delta, 3, 3);
    CHECK(d(2, 2).c11 == doctest::Approx(1.0));
    CHECK(d(0, 0).c11 == 0.0);
    // shrink-to-valid: the corner window holds 4 pixels
    CHECK(d(3, 3).c11 == doctest::Approx(1.0));
    C2Raster corner(5, 5);
    corner(0, 0).c11 = 4;
    CHECK(boxcar_multilook(corner, 3, 3)(0, 0).c11 == doctest::Approx(1.0));

    CHECK_THROWS_AS(boxcar_multilook(r, 7, 1), InvalidArgument);
  }

  TEST_CASE("boxcar even window spans (w-1)/2 before and w/2 after") {
    C2Raster line(1, 8);
    line(0, 5).c11 = 4;
    const C2Raster m = boxcar_multilook(line, 1, 4);  // window cols c-1 .. c+2
    CHECK(m(0, 3).c11 == doctest::Approx(1.0));
    CHECK(m(0, 6).c11 == doctest::Approx(4.0 / 3.0));  // window 5..8 shrinks to 5..7
    CHECK(m(0, 2).c11 == 0.0);
    CHECK(m(0, 7).c11 == 0.0);  // window 6..7 only (shrunk), so delta at 5 excluded
  }

  TEST_CASE("property: boxcar and temporal average commute with the transform") {
    const C2Raster a = testing::random_c2(7, 9, 41);
    const C2Raster b = testing::random_c2(7, 9, 42);
    const BandStack lhs = transform_raster(boxcar_multilook(a, 3, 4));
    const BandStack ta = transform_raster(a);
    // boxcar of each band through a single-channel raster trick
    for (std::size_t band = 0; band < 4; ++band) {
      C2Raster tmp(7, 9);
      for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i].c11 = ta.band(band)[i];
      const C2Raster sm = boxcar_multilook(tmp, 3, 4);
      for (std::size_t i = 0; i < tmp.size(); ++i) {
        CHECK(std::abs(sm[i].c11 - lhs.band(band)[i]) <= 1e-12 * std::max(1.0, std::abs(sm[i].c11)));
      }
    }

    TemporalStack s;
    s.epochs = {a, b};
    s.dates = {"2021-01-01", "2021-01-13"};
    const BandStack avg_t = transform_raster(temporal_average(s));
    const BandStack tb = transform_raster(b);
    for (std::size_t band = 0; band < 4; ++band) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double want = 0.5 * (ta.band(band)[i] + tb.band(band)[i]);
        CHECK(std::abs(avg_t.band(band)[i] - want) <= 1e-12 * std::max(1.0, want));
      }
    }
  }

  TEST_CASE("boxcar preserves validity") {
    const C2Raster r = testing::random_c2(10, 10, 77);
    for (const auto& px : boxcar_multilook(r, 3, 3).pixels()) CHECK(is_psd(px));
  }

  TEST_CASE("temporal average examples") {
    const C2Raster a = testing::random_c2(3, 3, 1);
    TemporalStack s;
    s.epochs = {a, a};
    s.dates = {"2021-01-01", "2021-01-13"};
    const C2Raster avg = temporal_average(s);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(matrix_rel_err(avg[i], a[i]) < 1e-15);

    TemporalStack t;
    t.epochs = {C2Raster(1, 1, Cov2{1, 0, {}}), C2Raster(1, 1, Cov2{3, 0, {}})};
    t.dates = {"2021-01-01", "2021-01-13"};
    CHECK(temporal_average(t)(0, 0).c11 == 2.0);

    t.epochs[1] = C2Raster(1, 2);
    CHECK_THROWS_AS(temporal_average(t), InvalidArgument);
  }

  TEST_CASE("temporal average of k single-look epochs has ENL near k") {
    const std::size_t k = 64;
    const C2Raster truth(128, 128, Cov2{1.0, 0.4, {0, 0}});
    TemporalStack s;
    for (std::size_t e = 0; e < k; ++e) {
      s.epochs.push_back(simulate_from_truth(truth, 2024, e));
      s.dates.push_back(add_days("2021-01-01", static_cast<int>(12 * e)));
    }
    const double value = enl(temporal_average(s), RegionOfInterest::whole(128, 128)).value;
    CHECK(value == doctest::Approx(64.0).epsilon(0.15));
  }

  TEST_CASE("span image is the trace") {
    const C2Raster r = testing::random_c2(2, 2, 9);
    const RealImage s = span_image(r);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(s[i] == r[i].c11 + r[i].c22);
  }
}
