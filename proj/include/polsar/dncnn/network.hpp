#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polsar/dncnn/layers.hpp"
#include "polsar/dncnn/tensor.hpp"

namespace polsar::nn {

/// DnCNN layout: Conv+ReLU, (depth-2) x (Conv+BN+ReLU), Conv.
struct NetConfig {
  std::size_t depth = 19;
  std::size_t width = 64;
  std::size_t kernel = 3;
  std::size_t in_channels = 4;
  std::size_t out_channels = 4;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.1;

  void validate() const;
  /// Pixels of context each output depends on, per side.
  std::size_t receptive_radius() const noexcept { return depth * (kernel / 2); }
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

template <class T>
struct ConvParams {
  Tensor4<T> weight;    ///< out x in x k x k
  std::vector<T> bias;  ///< empty for layers followed by batch norm
};

/// Network parameters. Also used as the container for gradients and Adam moments,
/// which share its shapes.
template <class T>
struct Network {
  NetConfig config;
  std::vector<ConvParams<T>> conv;     ///< one per layer
  std::vector<BatchNormParams<T>> bn;  ///< one per hidden layer (layers 1 .. depth-2)

  /// All-zero weights, unit BN scale, zero shift, running stats (0, 1).
  static Network zeros(const NetConfig& cfg);
  /// Kaiming fan-in normal weights, zero biases, BN gamma = 1, beta = 0.
  static Network kaiming(const NetConfig& cfg, std::uint64_t seed);

  /// Trainable tensors in a fixed order: per layer weight, bias (if any), gamma, beta.
  std::vector<std::span<T>> trainable();
  std::vector<std::span<const T>> trainable() const;
  /// Names matching trainable() order, e.g. "conv0.weight", "bn3.gamma".
  std::vector<std::string> trainable_names() const;
  std::size_t parameter_count() const;

  template <class U>
  Network<U> cast() const;
};

enum class Mode { train, infer };

/// Intermediate activations needed by backward().
template <class T>
struct ForwardCache {
  std::vector<Tensor4<T>> inputs;      ///< input of each conv layer
  std::vector<Tensor4<T>> pre_bn;      ///< conv output of each hidden layer
  std::vector<BatchNormCache<T>> bn;   ///< batch statistics of each hidden layer
};

/// Residual estimate R(x) with the same shape as x. In train mode BN uses batch
/// statistics and (if update_running) updates running statistics.
template <class T>
Tensor4<T> network_forward(Network<T>& net, const Tensor4<T>& x, Mode mode, ForwardCache<T>* cache = nullptr,
                           bool update_running = true);

/// Inference-only forward on a const network.
template <class T>
Tensor4<T> network_infer(const Network<T>& net, const Tensor4<T>& x);

/// Gradients of a scalar loss given dLoss/dR; requires the cache of a train-mode forward.
template <class T>
Network<T> network_backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor4<T>& grad_residual);

/// Residual loss sum_i ||R(y_i) - (y_i - x_i)||^2 over the batch and its gradients.
template <class T>
struct LossAndGrad {
  double loss = 0.0;
  Network<T> grads;
};

template <class T>
LossAndGrad<T> loss_and_grad(Network<T>& net, const Tensor4<T>& noisy, const Tensor4<T>& clean,
                             bool update_running = true);

/// Loss only, with the given BN mode.
template <class T>
double residual_loss(Network<T>& net, const Tensor4<T>& noisy, const Tensor4<T>& clean, Mode mode);

template <class T>
template <class U>
Network<U> Network<T>::cast() const {
  Network<U> out;
  out.config = config;
  out.conv.resize(conv.size());
  for (std::size_t l = 0; l < conv.size(); ++l) {
    out.conv[l].weight = conv[l].weight.template cast<U>();
    out.conv[l].bias.assign(conv[l].bias.begin(), conv[l].bias.end());
  }
  out.bn.resize(bn.size());
  for (std::size_t j = 0; j < bn.size(); ++j) {
    out.bn[j].gamma.assign(bn[j].gamma.begin(), bn[j].gamma.end());
    out.bn[j].beta.assign(bn[j].beta.begin(), bn[j].beta.end());
    out.bn[j].running_mean.assign(bn[j].running_mean.begin(), bn[j].running_mean.end());
    out.bn[j].running_var.assign(bn[j].running_var.begin(), bn[j].running_var.end());
  }
  return out;
}

}  // namespace polsar::nn
