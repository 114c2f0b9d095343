#include "polsar/dncnn/network.hpp"

#include <cmath>
#include <string>

#include "polsar/rng.hpp"

namespace polsar::nn {

void NetConfig::validate() const {
  if (depth < 3) throw InvalidArgument("network depth must be >= 3");
  if (kernel % 2 == 0 || kernel == 0) throw InvalidArgument("kernel size must be odd");
  if (width == 0 || in_channels == 0 || out_channels == 0) throw InvalidArgument("channel counts must be positive");
  if (!(bn_epsilon > 0.0)) throw InvalidArgument("bn_epsilon must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) throw InvalidArgument("bn_momentum must lie in (0, 1)");
}

namespace {

template <class T>
Network<T> shaped(const NetConfig& cfg) {
  cfg.validate();
  Network<T> net;
  net.config = cfg;
  net.conv.resize(cfg.depth);
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    const std::size_t in = l == 0 ? cfg.in_channels : cfg.width;
    const std::size_t out = l + 1 == cfg.depth ? cfg.out_channels : cfg.width;
    net.conv[l].weight = Tensor4<T>(out, in, cfg.kernel, cfg.kernel);
    const bool has_bias = l == 0 || l + 1 == cfg.depth;
    if (has_bias) net.conv[l].bias.assign(out, T(0));
  }
  net.bn.assign(cfg.depth - 2, BatchNormParams<T>(cfg.width));
  return net;
}

/// Same shapes, every entry (including BN scale) zero.
template <class T>
Network<T> zero_grads(const NetConfig& cfg) {
  auto g = shaped<T>(cfg);
  for (auto& b : g.bn) {
    std::fill(b.gamma.begin(), b.gamma.end(), T(0));
    std::fill(b.running_var.begin(), b.running_var.end(), T(0));
  }
  return g;
}

}  // namespace

template <class T>
Network<T> Network<T>::zeros(const NetConfig& cfg) {
  return shaped<T>(cfg);
}

template <class T>
Network<T> Network<T>::kaiming(const NetConfig& cfg, std::uint64_t seed) {
  auto net = shaped<T>(cfg);
  for (std::size_t l = 0; l < net.conv.size(); ++l) {
    auto& w = net.conv[l].weight;
    const double fan_in = static_cast<double>(w.c() * w.h() * w.w());
    const double stddev = std::sqrt(2.0 / fan_in);
    Rng rng(substream(seed, {0x6b61696dULL, l}));
    for (auto& v : w.values()) v = static_cast<T>(stddev * rng.gaussian());
  }
  return net;
}

template <class T>
std::vector<std::span<T>> Network<T>::trainable() {
  std::vector<std::span<T>> out;
  for (std::size_t l = 0; l < conv.size(); ++l) {
    out.emplace_back(conv[l].weight.values());
    if (!conv[l].bias.empty()) out.emplace_back(conv[l].bias);
    if (l >= 1 && l <= bn.size()) {
      out.emplace_back(bn[l - 1].gamma);
      out.emplace_back(bn[l - 1].beta);
    }
  }
  return out;
}

template <class T>
std::vector<std::span<const T>> Network<T>::trainable() const {
  std::vector<std::span<const T>> out;
  for (auto s : const_cast<Network*>(this)->trainable()) out.emplace_back(s.data(), s.size());
  return out;
}

template <class T>
std::vector<std::string> Network<T>::trainable_names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < conv.size(); ++l) {
    out.push_back("conv" + std::to_string(l) + ".weight");
    if (!conv[l].bias.empty()) out.push_back("conv" + std::to_string(l) + ".bias");
    if (l >= 1 && l <= bn.size()) {
      out.push_back("bn" + std::to_string(l) + ".gamma");
      out.push_back("bn" + std::to_string(l) + ".beta");
    }
  }
  return out;
}

template <class T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (auto s : trainable()) n += s.size();
  return n;
}

template <class T>
Tensor4<T> network_forward(Network<T>& net, const Tensor4<T>& x, Mode mode, ForwardCache<T>* cache,
                           bool update_running) {
  const auto& cfg = net.config;
  if (x.c() != cfg.in_channels) {
    throw InvalidArgument("network expects " + std::to_string(cfg.in_channels) + " input channels, got " +
                          std::to_string(x.c()));
  }
  if (x.h() < cfg.kernel || x.w() < cfg.kernel) throw InvalidArgument("input smaller than the convolution kernel");
  if (cache) *cache = {};
  Tensor4<T> a = x;
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    Tensor4<T> z = conv2d_forward<T>(a, net.conv[l].weight, net.conv[l].bias);
    if (cache) cache->inputs.push_back(std::move(a));
    if (l + 1 == cfg.depth) return z;
    if (l == 0) {
      relu_inplace(z);
      a = std::move(z);
      continue;
    }
    auto& bn = net.bn[l - 1];
    Tensor4<T> y;
    if (mode == Mode::train) {
      BatchNormCache<T> bc;
      y = batchnorm_forward_train(z, bn, cfg.bn_epsilon, cfg.bn_momentum, bc, update_running);
      if (cache) {
        cache->pre_bn.push_back(std::move(z));
        cache->bn.push_back(std::move(bc));
      }
    } else {
      y = batchnorm_forward_infer(z, bn, cfg.bn_epsilon);
    }
    relu_inplace(y);
    a = std::move(y);
  }
  return a;  // unreachable: depth >= 3
}

template <class T>
Tensor4<T> network_infer(const Network<T>& net, const Tensor4<T>& x) {
  // Inference never touches running statistics, so the const_cast is not observable.
  return network_forward<T>(const_cast<Network<T>&>(net), x, Mode::infer, nullptr, false);
}

template <class T>
Network<T> network_backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor4<T>& grad_residual) {
  const auto& cfg = net.config;
  if (cache.inputs.size() != cfg.depth || cache.pre_bn.size() != cfg.depth - 2) {
    throw InvalidArgument("network_backward needs the cache of a training-mode forward pass");
  }
  Network<T> grads = zero_grads<T>(cfg);
  Tensor4<T> g = grad_residual;
  for (std::size_t l = cfg.depth; l-- > 0;) {
    auto cg = conv2d_backward<T>(g, cache.inputs[l], net.conv[l].weight, l > 0);
    grads.conv[l].weight = std::move(cg.grad_weight);
    if (!grads.conv[l].bias.empty()) grads.conv[l].bias = std::move(cg.grad_bias);
    if (l == 0) break;
    g = std::move(cg.grad_x);
    relu_backward_inplace(g, cache.inputs[l]);
    if (l - 1 >= 1) {
      const std::size_t j = l - 2;
      auto bg = batchnorm_backward(g, cache.pre_bn[j], net.bn[j], cache.bn[j]);
      grads.bn[j].gamma = std::move(bg.grad_gamma);
      grads.bn[j].beta = std::move(bg.grad_beta);
      g = std::move(bg.grad_x);
    }
  }
  return grads;
}

namespace {

template <class T>
void check_pair(const Tensor4<T>& noisy, const Tensor4<T>& clean) {
  if (!noisy.same_shape(clean)) {
    throw InvalidArgument("noisy " + noisy.shape_string() + " and clean " + clean.shape_string() + " batches differ");
  }
  if (noisy.n() == 0) throw InvalidArgument("empty batch");
}

}  // namespace

template <class T>
LossAndGrad<T> loss_and_grad(Network<T>& net, const Tensor4<T>& noisy, const Tensor4<T>& clean, bool update_running) {
  check_pair(noisy, clean);
  ForwardCache<T> cache;
  Tensor4<T> residual = network_forward(net, noisy, Mode::train, &cache, update_running);
  LossAndGrad<T> out;
  double loss = 0.0;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    const double diff = static_cast<double>(residual[i]) - (static_cast<double>(noisy[i]) - clean[i]);
    loss += diff * diff;
    residual[i] = static_cast<T>(2.0 * diff);
  }
  out.loss = loss;
  out.grads = network_backward(net, cache, residual);
  return out;
}

template <class T>
double residual_loss(Network<T>& net, const Tensor4<T>& noisy, const Tensor4<T>& clean, Mode mode) {
  check_pair(noisy, clean);
  const Tensor4<T> residual = network_forward<T>(net, noisy, mode, nullptr, false);
  double loss = 0.0;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    const double diff = static_cast<double>(residual[i]) - (static_cast<double>(noisy[i]) - clean[i]);
    loss += diff * diff;
  }
  return loss;
}

#define POLSAR_INSTANTIATE_NETWORK(T)                                                                        \
  template struct Network<T>;                                                                               \
  template Tensor4<T> network_forward<T>(Network<T>&, const Tensor4<T>&, Mode, ForwardCache<T>*, bool);      \
  template Tensor4<T> network_infer<T>(const Network<T>&, const Tensor4<T>&);                               \
  template Network<T> network_backward<T>(const Network<T>&, const ForwardCache<T>&, const Tensor4<T>&);    \
  template LossAndGrad<T> loss_and_grad<T>(Network<T>&, const Tensor4<T>&, const Tensor4<T>&, bool);       \
  template double residual_loss<T>(Network<T>&, const Tensor4<T>&, const Tensor4<T>&, Mode);

POLSAR_INSTANTIATE_NETWORK(float)
POLSAR_INSTANTIATE_NETWORK(double)

#undef POLSAR_INSTANTIATE_NETWORK

}  // namespace polsar::nn
