#include <doctest.h>

#include "helpers.hpp"
#include "polsar/dncnn/network.hpp"

using namespace polsar;
using namespace polsar::nn;

namespace {

NetConfig small_cfg(std::size_t depth = 4, std::size_t width = 3) {
  NetConfig c;
  c.depth = depth;
  c.width = width;
  return c;
}

template <class T>
Tensor4<T> random_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed, double lo = 0,
                         double hi = 1) {
  Tensor4<T> t(n, c, h, w);
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(lo + (hi - lo) * rng.uniform());
  return t;
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("layout and parameter count") {
    const NetConfig cfg = small_cfg(5, 8);
    const auto net = Network<float>::kaiming(cfg, 1);
    REQUIRE(net.conv.size() == 5);
    REQUIRE(net.bn.size() == 3);
    CHECK(net.conv[0].weight.shape_string() == "8x4x3x3");
    CHECK(net.conv[2].weight.shape_string() == "8x8x3x3");
    CHECK(net.conv[4].weight.shape_string() == "4x8x3x3");
    CHECK(net.conv[0].bias.size() == 8);
    CHECK(net.conv[1].bias.empty());
    CHECK(net.conv[4].bias.size() == 4);
    const std::size_t want = (8 * 4 * 9 + 8) + 3 * (8 * 8 * 9 + 2 * 8) + (4 * 8 * 9 + 4);
    CHECK(net.parameter_count() == want);
    const auto names = net.trainable_names();
    CHECK(names.size() == net.trainable().size());
    CHECK(names.front() == "conv0.weight");
    CHECK(names[1] == "conv0.bias");
    CHECK(names[2] == "conv1.weight");
    CHECK(names[3] == "bn1.gamma");
    CHECK(names.back() == "conv4.bias");
    CHECK(cfg.receptive_radius() == 5);
  }

  TEST_CASE("invalid configurations are rejected") {
    NetConfig c = small_cfg();
    c.kernel = 4;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_cfg();
    c.depth = 1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_cfg();
    c.width = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }

  TEST_CASE("kaiming init is seeded and fan-in scaled") {
    const NetConfig cfg = small_cfg(3, 64);
    const auto a = Network<double>::kaiming(cfg, 7);
    const auto b = Network<double>::kaiming(cfg, 7);
    const auto c = Network<double>::kaiming(cfg, 8);
    CHECK(a.conv[1].weight == b.conv[1].weight);
    CHECK_FALSE(a.conv[1].weight == c.conv[1].weight);
    // fan-in 64 * 9, variance 2 / fan_in
    double s2 = 0;
    const auto& w = a.conv[1].weight;
    for (std::size_t i = 0; i < w.size(); ++i) s2 += w[i] * w[i];
    CHECK(s2 / static_cast<double>(w.size()) == doctest::Approx(2.0 / (64 * 9)).epsilon(0.05));
  }

  TEST_CASE("zero model predicts a zero residual in both modes") {
    auto net = Network<float>::zeros(small_cfg(6, 8));
    const auto x = random_tensor<float>(2, 4, 10, 12, 1);
    const auto yi = network_infer(net, x);
    const auto yt = network_forward(net, x, Mode::train);
    for (float v : yi.values()) CHECK(v == 0.0f);
    for (float v : yt.values()) CHECK(v == 0.0f);
  }

  TEST_CASE("output depends only on inputs within the receptive radius") {
    const NetConfig cfg = small_cfg(4, 6);
    const auto net = Network<double>::kaiming(cfg, 3);
    auto x = random_tensor<double>(1, 4, 21, 21, 4);
    const auto base = network_infer(net, x);
    x(0, 2, 10, 10) += 0.5;
    const auto moved = network_infer(net, x);
    const long radius = static_cast<long>(cfg.receptive_radius());
    bool edge_changed = false;
    for (std::size_t c = 0; c < 4; ++c) {
      for (long r = 0; r < 21; ++r) {
        for (long q = 0; q < 21; ++q) {
          const long d = std::max(std::abs(r - 10), std::abs(q - 10));
          const bool changed = moved(0, c, r, q) != base(0, c, r, q);
          if (d > radius) CHECK_FALSE(changed);
          if (d == radius && changed) edge_changed = true;
        }
      }
    }
    CHECK(edge_changed);
  }

  TEST_CASE("train mode updates running statistics, infer mode does not") {
    auto net = Network<double>::kaiming(small_cfg(), 5);
    const auto x = random_tensor<double>(3, 4, 6, 6, 6);
    const auto before = net.bn[0].running_mean;
    network_infer(net, x);
    CHECK(net.bn[0].running_mean == before);
    network_forward<double>(net, x, Mode::train, nullptr, false);
    CHECK(net.bn[0].running_mean == before);
    network_forward(net, x, Mode::train);
    CHECK_FALSE(net.bn[0].running_mean == before);
  }

  TEST_CASE("float and double forward passes agree") {
    const auto netd = Network<double>::kaiming(small_cfg(5, 8), 9);
    const auto netf = netd.cast<float>();
    const auto x = random_tensor<double>(2, 4, 9, 9, 10);
    const auto yd = network_infer(netd, x);
    const auto yf = network_infer(netf, x.cast<float>());
    for (std::size_t i = 0; i < yd.size(); ++i) CHECK(yf[i] == doctest::Approx(yd[i]).epsilon(1e-4).scale(1.0));
  }

  TEST_CASE("residual loss is zero when the residual is exact") {
    auto net = Network<double>::zeros(small_cfg());
    const auto x = random_tensor<double>(2, 4, 5, 5, 11);
    CHECK(residual_loss(net, x, x, Mode::infer) == 0.0);
    auto clean = x;
    clean[0] -= 0.25;
    CHECK(residual_loss(net, x, clean, Mode::infer) == doctest::Approx(0.0625));
    CHECK_THROWS_AS(residual_loss(net, x, Tensor4<double>(2, 4, 5, 4), Mode::infer), InvalidArgument);
  }

  TEST_CASE("full network gradients match central differences") {
    const NetConfig cfg = small_cfg(4, 3);
    auto net = Network<double>::kaiming(cfg, 21);
    // perturb BN affine and biases away from their init so their gradients are exercised
    Rng rng(22);
    for (auto& bn : net.bn) {
      for (auto& g : bn.gamma) g = 0.5 + rng.uniform();
      for (auto& b : bn.beta) b = 0.2 * rng.gaussian();
    }
    for (auto& c : net.conv) {
      for (auto& b : c.bias) b = 0.1 * rng.gaussian();
    }
    const auto noisy = random_tensor<double>(2, 4, 5, 5, 23);
    const auto clean = random_tensor<double>(2, 4, 5, 5, 24);
    const auto lg = loss_and_grad(net, noisy, clean, false);
    CHECK(lg.loss == doctest::Approx(residual_loss(net, noisy, clean, Mode::train)).epsilon(1e-12));

    auto params = net.trainable();
    const auto grads = lg.grads.trainable();
    const auto names = net.trainable_names();
    const double h = 1e-6;
    double worst = 0;
    std::string worst_name;
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t i = 0; i < params[t].size(); ++i) {
        const double keep = params[t][i];
        params[t][i] = keep + h;
        const double up = residual_loss(net, noisy, clean, Mode::train);
        params[t][i] = keep - h;
        const double down = residual_loss(net, noisy, clean, Mode::train);
        params[t][i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double gap = std::abs(grads[t][i] - numeric) / std::max(1e-4, std::max(std::abs(numeric), std::abs(grads[t][i])));
        if (gap > worst) {
          worst = gap;
          worst_name = names[t];
        }
      }
    }
    INFO("worst tensor: " << worst_name);
    CHECK(worst < 1e-4);
  }
}
