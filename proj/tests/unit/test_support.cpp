#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>

#include "helpers.hpp"
#include "polsar/grid.hpp"
#include "polsar/parallel.hpp"
#include "polsar/rng.hpp"
#include "polsar/stats.hpp"

using namespace polsar;

TEST_SUITE("support") {
  TEST_CASE("rng streams are reproducible and substreams differ") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    std::set<std::uint64_t> keys;
    for (std::uint64_t r = 0; r < 50; ++r) {
      for (std::uint64_t c = 0; c < 50; ++c) keys.insert(substream(7, {r, c}));
    }
    CHECK(keys.size() == 2500);
    CHECK(substream(7, {1, 2}) != substream(7, {2, 1}));
    CHECK(substream(7, {1}) != substream(8, {1}));
  }

  TEST_CASE("rng moments") {
    Rng rng(3);
    const int n = 200000;
    double su = 0, sg = 0, sg2 = 0, sz2 = 0;
    for (int i = 0; i < n; ++i) {
      su += rng.uniform();
      const double g = rng.gaussian();
      sg += g;
      sg2 += g * g;
      sz2 += std::norm(rng.complex_gaussian());
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sg / n) < 0.01);
    CHECK(sg2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sz2 / n == doctest::Approx(1.0).epsilon(0.01));
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
  }

  TEST_CASE("parallel_for covers every index once for any worker count") {
    const std::size_t saved = thread_count();
    for (std::size_t t : {1, 2, 3, 8}) {
      set_thread_count(t);
      std::vector<int> hits(1001, 0);
      parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ++hits[i];
      });
      CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
    set_thread_count(saved);
  }

  TEST_CASE("parallel_for propagates exceptions") {
    const std::size_t saved = thread_count();
    set_thread_count(4);
    CHECK_THROWS_AS(parallel_for(100,
                                 [](std::size_t b, std::size_t) {
                                   if (b > 0) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    set_thread_count(saved);
  }

  TEST_CASE("parallel_for with zero items is a no-op") {
    bool called = false;
    parallel_for(0, [&](std::size_t, std::size_t) { called = true; });
    CHECK_FALSE(called);
  }

  TEST_CASE("percentile interpolates linearly between order statistics") {
    // numpy.percentile([1, 2, 3, 4], [0, 25, 50, 99.9, 100]) -> 1, 1.75, 2.5, 3.997, 4
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(percentile(v, 0) == 1.0);
    CHECK(percentile(v, 25) == doctest::Approx(1.75));
    CHECK(percentile(v, 50) == doctest::Approx(2.5));
    CHECK(percentile(v, 99.9) == doctest::Approx(3.997));
    CHECK(percentile(v, 100) == 4.0);
    const std::vector<double> pcts{0, 50, 100};
    const auto many = percentiles(v, pcts);
    CHECK(many == std::vector<double>{1.0, 2.5, 4.0});
    CHECK(percentile({5.0}, 37) == 5.0);
  }

  TEST_CASE("grid shape checks") {
    Grid<int> a(2, 3, 1), b(3, 2, 1);
    CHECK(a.size() == 6);
    CHECK(a(1, 2) == 1);
    CHECK_FALSE(a.same_shape(b));
    CHECK_THROWS(require_same_shape(a, b, "test"));
    Rect r{1, 1, 2, 2};
    CHECK(r.fits(3, 3));
    CHECK_FALSE(r.fits(2, 3));
  }
}
