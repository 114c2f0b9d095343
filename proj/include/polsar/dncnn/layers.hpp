#pragma once

#include <span>
#include <vector>

#include "polsar/dncnn/tensor.hpp"

namespace polsar::nn {

// Layer primitives, instantiated for float (training/inference) and double (gradient checks).

/// Same-padded (zero) cross-correlation: out[n,f] = b[f] + sum_c w[f,c] * x[n,c].
/// `weight` is F x C x k x k with k odd; `bias` is empty or has F entries.
template <class T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const Tensor4<T>& weight, std::span<const T> bias);

template <class T>
struct ConvGrads {
  Tensor4<T> grad_x;       ///< empty when not requested
  Tensor4<T> grad_weight;
  std::vector<T> grad_bias;
};

/// Exact gradients of conv2d_forward. Per-sample weight gradients are summed in
/// sample order, so the result does not depend on the worker count.
template <class T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& grad_out, const Tensor4<T>& x, const Tensor4<T>& weight,
                             bool need_grad_x = true);

template <class T>
struct BatchNormParams {
  std::vector<T> gamma, beta, running_mean, running_var;

  explicit BatchNormParams(std::size_t channels = 0)
      : gamma(channels, T(1)), beta(channels, T(0)), running_mean(channels, T(0)), running_var(channels, T(1)) {}
  std::size_t channels() const noexcept { return gamma.size(); }
};

/// Per-channel batch statistics saved by a training-mode forward pass.
template <class T>
struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> inv_std;
};

/// Training mode: normalizes with batch statistics (biased variance) and updates the
/// running statistics as running = (1 - momentum) * running + momentum * batch, using the
/// unbiased variance. Throws InvalidArgument if N*H*W < 2.
template <class T>
Tensor4<T> batchnorm_forward_train(const Tensor4<T>& x, BatchNormParams<T>& params, double epsilon, double momentum,
                                   BatchNormCache<T>& cache, bool update_running = true);

/// Inference mode: uses running statistics.
template <class T>
Tensor4<T> batchnorm_forward_infer(const Tensor4<T>& x, const BatchNormParams<T>& params, double epsilon);

template <class T>
struct BatchNormGrads {
  Tensor4<T> grad_x;
  std::vector<T> grad_gamma, grad_beta;
};

/// Backward of the training-mode forward; `x` is the forward input.
template <class T>
BatchNormGrads<T> batchnorm_backward(const Tensor4<T>& grad_y, const Tensor4<T>& x, const BatchNormParams<T>& params,
                                     const BatchNormCache<T>& cache);

/// max(0, x), in place.
template <class T>
void relu_inplace(Tensor4<T>& x);

/// Masks `grad` in place where the ReLU output is not positive (subgradient at 0 is 0).
template <class T>
void relu_backward_inplace(Tensor4<T>& grad, const Tensor4<T>& relu_output);

}  // namespace polsar::nn
