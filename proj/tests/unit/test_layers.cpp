#include <doctest.h>

#include <functional>

#include "helpers.hpp"
#include "polsar/dncnn/layers.hpp"
#include "polsar/parallel.hpp"

using namespace polsar;
using namespace polsar::nn;

namespace {

Tensor4<double> random_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  Tensor4<double> t(n, c, h, w);
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian();
  return t;
}

// Direct same-padded cross-correlation, straight from the definition.
Tensor4<double> conv_reference(const Tensor4<double>& x, const Tensor4<double>& w, const std::vector<double>& b) {
  const std::size_t k = w.h(), pad = k / 2;
  Tensor4<double> y(x.n(), w.n(), x.h(), x.w());
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t f = 0; f < w.n(); ++f) {
      for (std::size_t r = 0; r < x.h(); ++r) {
        for (std::size_t c = 0; c < x.w(); ++c) {
          double s = b.empty() ? 0.0 : b[f];
          for (std::size_t ch = 0; ch < x.c(); ++ch) {
            for (std::size_t i = 0; i < k; ++i) {
              for (std::size_t j = 0; j < k; ++j) {
                const long rr = static_cast<long>(r + i) - static_cast<long>(pad);
                const long cc = static_cast<long>(c + j) - static_cast<long>(pad);
                if (rr < 0 || cc < 0 || rr >= static_cast<long>(x.h()) || cc >= static_cast<long>(x.w())) continue;
                s += w(f, ch, i, j) * x(n, ch, static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
              }
            }
          }
          y(n, f, r, c) = s;
        }
      }
    }
  }
  return y;
}

double dot(const Tensor4<double>& a, const Tensor4<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Central difference of `loss` with respect to values[i].
double central_diff(std::span<double> values, std::size_t i, double h, const std::function<double()>& loss) {
  const double keep = values[i];
  values[i] = keep + h;
  const double up = loss();
  values[i] = keep - h;
  const double down = loss();
  values[i] = keep;
  return (up - down) / (2 * h);
}

double rel_gap(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-6, std::max(std::abs(analytic), std::abs(numeric)));
}

}  // namespace

TEST_SUITE("layers") {
  TEST_CASE("one-hot input through a 3x3 ones kernel gives a 3x3 block") {
    Tensor4<double> x(1, 1, 5, 5);
    x(0, 0, 2, 2) = 1.0;
    Tensor4<double> w(1, 1, 3, 3);
    for (std::size_t i = 0; i < 9; ++i) w[i] = 1.0;
    const std::vector<double> bias{0.0};
    const Tensor4<double> y = conv2d_forward(x, w, std::span<const double>(bias));
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t c = 0; c < 5; ++c) {
        const bool in = r >= 1 && r <= 3 && c >= 1 && c <= 3;
        CHECK(y(0, 0, r, c) == (in ? 1.0 : 0.0));
      }
    }
    // at the border zero padding clips the block
    Tensor4<double> corner(1, 1, 5, 5);
    corner(0, 0, 0, 0) = 1.0;
    const Tensor4<double> yc = conv2d_forward(corner, w, std::span<const double>(bias));
    double total = 0;
    for (std::size_t i = 0; i < yc.size(); ++i) total += yc[i];
    CHECK(total == 4.0);
  }

  TEST_CASE("convolution matches the direct definition") {
    for (std::size_t k : {1, 3, 5}) {
      const auto x = random_tensor(2, 3, 7, 6, 10 + k);
      const auto w = random_tensor(4, 3, k, k, 20 + k);
      const std::vector<double> b{0.1, -0.2, 0.3, 0.4};
      const auto got = conv2d_forward(x, w, std::span<const double>(b));
      const auto want = conv_reference(x, w, b);
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
      const auto nobias = conv2d_forward(x, w, std::span<const double>());
      const auto want0 = conv_reference(x, w, {});
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(nobias[i] == doctest::Approx(want0[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("float convolution agrees with double") {
    const auto x = random_tensor(2, 4, 9, 9, 1);
    const auto w = random_tensor(6, 4, 3, 3, 2);
    const auto yd = conv2d_forward(x, w, std::span<const double>());
    const auto yf = conv2d_forward(x.cast<float>(), w.cast<float>(), std::span<const float>());
    for (std::size_t i = 0; i < yd.size(); ++i) CHECK(yf[i] == doctest::Approx(yd[i]).epsilon(1e-4).scale(1.0));
  }

  TEST_CASE("convolution gradients match central differences") {
    auto x = random_tensor(2, 3, 5, 6, 3);
    auto w = random_tensor(4, 3, 3, 3, 4);
    std::vector<double> b{0.3, -0.1, 0.2, 0.05};
    const auto g = random_tensor(2, 4, 5, 6, 5);  // upstream gradient, loss = <g, y>
    const auto grads = conv2d_backward(g, x, w);
    auto loss = [&] { return dot(g, conv2d_forward(x, w, std::span<const double>(b))); };
    const double h = 1e-5;
    double worst = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      worst = std::max(worst, rel_gap(grads.grad_weight[i], central_diff(w.values(), i, h, loss)));
    }
    for (std::size_t i = 0; i < b.size(); ++i) worst = std::max(worst, rel_gap(grads.grad_bias[i], central_diff(b, i, h, loss)));
    for (std::size_t i = 0; i < x.size(); ++i) {
      worst = std::max(worst, rel_gap(grads.grad_x[i], central_diff(x.values(), i, h, loss)));
    }
    CHECK(worst < 1e-5);
    // grad_x is optional
    CHECK(conv2d_backward(g, x, w, false).grad_x.size() == 0);
  }

  TEST_CASE("weight gradient does not depend on the worker count") {
    const auto x = random_tensor(7, 3, 8, 8, 6).cast<float>();
    const auto w = random_tensor(5, 3, 3, 3, 7).cast<float>();
    const auto g = random_tensor(7, 5, 8, 8, 8).cast<float>();
    const std::size_t saved = thread_count();
    set_thread_count(1);
    const auto a = conv2d_backward(g, x, w);
    set_thread_count(3);
    const auto b = conv2d_backward(g, x, w);
    set_thread_count(saved);
    CHECK(a.grad_weight == b.grad_weight);
    CHECK(a.grad_bias == b.grad_bias);
    CHECK(a.grad_x == b.grad_x);
  }

  TEST_CASE("batch norm train forward normalizes and updates running stats") {
    const auto x = random_tensor(4, 2, 3, 3, 9);
    BatchNormParams<double> p(2);
    p.gamma = {2.0, 0.5};
    p.beta = {1.0, -1.0};
    BatchNormCache<double> cache;
    const auto y = batchnorm_forward_train(x, p, 1e-5, 0.1, cache);
    for (std::size_t c = 0; c < 2; ++c) {
      double m = 0, s2 = 0, xm = 0, xs2 = 0;
      const double cnt = 4 * 9;
      for (std::size_t n = 0; n < 4; ++n) {
        for (std::size_t i = 0; i < 9; ++i) {
          m += y(n, c, i / 3, i % 3);
          xm += x(n, c, i / 3, i % 3);
        }
      }
      m /= cnt;
      xm /= cnt;
      for (std::size_t n = 0; n < 4; ++n) {
        for (std::size_t i = 0; i < 9; ++i) {
          s2 += std::pow(y(n, c, i / 3, i % 3) - m, 2);
          xs2 += std::pow(x(n, c, i / 3, i % 3) - xm, 2);
        }
      }
      CHECK(m == doctest::Approx(p.beta[c]).epsilon(1e-12));
      const double biased = xs2 / cnt;
      CHECK(std::sqrt(s2 / cnt) == doctest::Approx(p.gamma[c] * std::sqrt(biased / (biased + 1e-5))).epsilon(1e-10));
      CHECK(p.running_mean[c] == doctest::Approx(0.1 * xm).epsilon(1e-12));
      CHECK(p.running_var[c] == doctest::Approx(0.9 + 0.1 * xs2 / (cnt - 1)).epsilon(1e-12));
    }
  }

  TEST_CASE("batch norm inference uses running statistics") {
    Tensor4<double> x(1, 1, 1, 2);
    x[0] = 3.0;
    x[1] = 5.0;
    BatchNormParams<double> p(1);
    p.running_mean = {1.0};
    p.running_var = {4.0};
    p.gamma = {2.0};
    p.beta = {0.5};
    const auto y = batchnorm_forward_infer(x, p, 0.0);
    CHECK(y[0] == doctest::Approx(2.0 * (3.0 - 1.0) / 2.0 + 0.5));
    CHECK(y[1] == doctest::Approx(2.0 * (5.0 - 1.0) / 2.0 + 0.5));
  }

  TEST_CASE("batch norm rejects a single sample per channel") {
    Tensor4<double> x(1, 2, 1, 1);
    BatchNormParams<double> p(2);
    BatchNormCache<double> cache;
    CHECK_THROWS_AS(batchnorm_forward_train(x, p, 1e-5, 0.1, cache), InvalidArgument);
  }

  TEST_CASE("batch norm gradients match central differences") {
    auto x = random_tensor(3, 2, 3, 4, 11);
    BatchNormParams<double> p(2);
    p.gamma = {1.3, 0.7};
    p.beta = {0.2, -0.4};
    const auto g = random_tensor(3, 2, 3, 4, 12);
    auto loss = [&] {
      BatchNormParams<double> q = p;
      BatchNormCache<double> c;
      return dot(g, batchnorm_forward_train(x, q, 1e-5, 0.1, c, false));
    };
    BatchNormParams<double> q = p;
    BatchNormCache<double> cache;
    batchnorm_forward_train(x, q, 1e-5, 0.1, cache, false);
    const auto grads = batchnorm_backward(g, x, p, cache);
    const double h = 1e-5;
    double worst = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      worst = std::max(worst, rel_gap(grads.grad_x[i], central_diff(x.values(), i, h, loss)));
    }
    for (std::size_t c = 0; c < 2; ++c) {
      worst = std::max(worst, rel_gap(grads.grad_gamma[c], central_diff(p.gamma, c, h, loss)));
      worst = std::max(worst, rel_gap(grads.grad_beta[c], central_diff(p.beta, c, h, loss)));
    }
    CHECK(worst < 1e-5);
  }

  TEST_CASE("relu and its gradient mask") {
    Tensor4<double> x(1, 1, 1, 4);
    x[0] = -1;
    x[1] = 0;
    x[2] = 2;
    x[3] = -0.5;
    relu_inplace(x);
    CHECK(std::vector<double>(x.values().begin(), x.values().end()) == std::vector<double>{0, 0, 2, 0});
    Tensor4<double> g(1, 1, 1, 4);
    for (std::size_t i = 0; i < 4; ++i) g[i] = 1.0;
    relu_backward_inplace(g, x);
    CHECK(std::vector<double>(g.values().begin(), g.values().end()) == std::vector<double>{0, 0, 1, 0});
  }

  TEST_CASE("relu gradient matches central differences away from the kink") {
    auto x = random_tensor(1, 2, 4, 4, 13);
    for (auto& v : x.values()) {
      if (std::abs(v) < 1e-2) v = 0.5;
    }
    const auto g = random_tensor(1, 2, 4, 4, 14);
    auto loss = [&] {
      auto y = x;
      relu_inplace(y);
      return dot(g, y);
    };
    auto y = x;
    relu_inplace(y);
    auto grad = g;
    relu_backward_inplace(grad, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(rel_gap(grad[i], central_diff(x.values(), i, 1e-3, loss)) < 1e-5);
    }
  }
}
