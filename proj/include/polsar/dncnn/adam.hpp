#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "polsar/dncnn/network.hpp"

namespace polsar::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of a single parameter tensor at step t >= 1:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v, std::size_t t,
               double lr, const AdamConfig& cfg = {});

/// Adam over every trainable tensor of a network.
template <class T>
class AdamOptimizer {
 public:
  AdamOptimizer(const Network<T>& net, AdamConfig cfg = {});

  void step(Network<T>& net, const Network<T>& grads, double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace polsar::nn
