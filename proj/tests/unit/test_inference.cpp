#include <doctest.h>

#include "helpers.hpp"
#include "polsar/dncnn/inference.hpp"

using namespace polsar;
using namespace polsar::nn;

namespace {

BandStack random_bands(std::size_t h, std::size_t w, std::uint64_t seed) {
  BandStack b(h, w);
  Rng rng(seed);
  for (std::size_t k = 0; k < 4; ++k) {
    for (auto& v : b.band(k).pixels()) v = rng.uniform();
  }
  return b;
}

NetConfig small(std::size_t depth) {
  NetConfig c;
  c.depth = depth;
  c.width = 5;
  return c;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("tile starts cover the axis with the last tile flush") {
    CHECK(tile_starts(100, 32, 8) == std::vector<std::size_t>{0, 24, 48, 68});
    CHECK(tile_starts(32, 32, 8) == std::vector<std::size_t>{0});
    CHECK(tile_starts(20, 32, 8) == std::vector<std::size_t>{0});
    CHECK(tile_starts(33, 32, 8) == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(tile_starts(100, 8, 8), InvalidArgument);
  }

  TEST_CASE("property: tiles cover every pixel and overlap by at least the requested amount") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
      const std::size_t tile = 4 + rng.below(60);
      const std::size_t overlap = rng.below(tile);
      const std::size_t len = 1 + rng.below(400);
      const auto s = tile_starts(len, tile, overlap);
      CHECK(s.front() == 0);
      CHECK(std::min(len, s.back() + tile) == len);
      for (std::size_t i = 1; i < s.size(); ++i) {
        CHECK(s[i] > s[i - 1]);
        CHECK(s[i - 1] + tile >= s[i] + overlap);
      }
    }
  }

  TEST_CASE("tiled inference equals whole-image inference") {
    const auto net = Network<float>::kaiming(small(4), 5);  // radius 4
    const BandStack x = random_bands(70, 53, 6);
    DespeckleOptions whole;
    whole.tile = 128;
    whole.overlap = 8;
    std::size_t n1 = 0, n2 = 0;
    const BandStack a = despeckle_bands(x, net, whole, &n1);
    DespeckleOptions tiled;
    tiled.tile = 24;
    tiled.overlap = 10;
    const BandStack b = despeckle_bands(x, net, tiled, &n2);
    CHECK(n1 == 1);
    CHECK(n2 == tile_starts(70, 24, 10).size() * tile_starts(53, 24, 10).size());
    double worst = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < x.band(k).size(); ++i) worst = std::max(worst, std::abs(a.band(k)[i] - b.band(k)[i]));
    }
    CHECK(worst < 1e-5);
  }

  TEST_CASE("a tile smaller than the receptive field is refused") {
    const auto net = Network<float>::zeros(small(6));  // field 13
    DespeckleOptions o;
    o.tile = 12;
    o.overlap = 4;
    CHECK_THROWS_WITH_AS(despeckle_bands(random_bands(30, 30, 1), net, o), doctest::Contains("receptive field"),
                         InvalidArgument);
  }

  TEST_CASE("zero-weight model makes the pipeline an identity") {
    const C2Raster in = testing::random_c2(37, 29, 8);
    NetworkModel model;
    model.net = Network<float>::zeros(small(5));
    std::vector<BandStack> bands{transform_raster(in)};
    model.norm = compute_norm_stats(bands, 0.0, 100.0);
    DespeckleOptions o;
    o.tile = 16;
    o.overlap = 6;
    DespeckleReport rep;
    const C2Raster out = despeckle_raster(in, model, o, &rep);
    CHECK(rep.output_clipped == 0);
    CHECK(rep.input_clips.above == 0);
    CHECK(rep.tiles == tile_starts(37, 16, 6).size() * tile_starts(29, 16, 6).size());
    REQUIRE(out.height() == 37);
    REQUIRE(out.width() == 29);
    // float tensors carry the normalized values: allow a few float ulps of the band range
    const auto& hi = model.norm.x_max;
    for (std::size_t i = 0; i < in.size(); ++i) {
      CHECK(std::abs(out[i].c11 - in[i].c11) < 1e-6 * hi[0]);
      CHECK(std::abs(out[i].c22 - in[i].c22) < 1e-6 * hi[3]);
      CHECK(std::abs(out[i].c12 - in[i].c12) < 1e-6 * std::max(hi[1], hi[2]));
    }
  }

  TEST_CASE("clipped outputs are counted") {
    C2Raster in(12, 12, Cov2{2, 1, {0.1, 0.1}});
    NetworkModel model;
    model.net = Network<float>::zeros(small(3));
    model.norm = NormStats{{0, 0, 0, 0}, {1, 2, 2, 1}};  // c11 = 2 is above the range
    DespeckleReport rep;
    const C2Raster out = despeckle_raster(in, model, {}, &rep);
    CHECK(rep.input_clips.above == 144 * 3);  // vv, i and q
    CHECK(out(0, 0).c11 == doctest::Approx(1.0));
  }
}
