#include "polsar/dncnn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "polsar/parallel.hpp"

namespace polsar::nn {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unfolds one C x H x W sample into a (C k k) x (H W) matrix of zero-padded neighbourhoods.
template <class T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w, std::size_t k, T* cols) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = x + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        T* dst_row = cols + row * h * w;
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          T* dst = dst_row + y * W;
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H || x1 <= x0) {
            std::fill(dst, dst + W, T(0));
            continue;
          }
          std::fill(dst, dst + x0, T(0));
          std::memcpy(dst + x0, plane + sy * W + x0 + dx, static_cast<std::size_t>(x1 - x0) * sizeof(T));
          std::fill(dst + x1, dst + W, T(0));
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters (C k k) x (H W) columns back onto a C x H x W sample.
template <class T>
void col2im(const T* cols, std::size_t channels, std::size_t h, std::size_t w, std::size_t k, T* x) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  std::fill(x, x + channels * h * w, T(0));
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = x + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        const T* src_row = cols + row * h * w;
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          const T* src = src_row + y * W;
          T* dst = plane + sy * W + dx;
          for (std::ptrdiff_t xx = x0; xx < x1; ++xx) dst[xx] += src[xx];
        }
      }
    }
  }
}

template <class T>
void check_conv_shapes(const Tensor4<T>& x, const Tensor4<T>& weight) {
  if (weight.c() != x.c()) {
    throw InvalidArgument("conv2d: weight expects " + std::to_string(weight.c()) + " input channels, got " +
                          std::to_string(x.c()));
  }
  if (weight.h() != weight.w() || weight.h() % 2 == 0) throw InvalidArgument("conv2d: kernel must be square and odd");
}

}  // namespace

template <class T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const Tensor4<T>& weight, std::span<const T> bias) {
  check_conv_shapes(x, weight);
  const std::size_t F = weight.n();
  if (!bias.empty() && bias.size() != F) throw InvalidArgument("conv2d: bias size does not match filter count");
  const std::size_t k = weight.h();
  const std::size_t ckk = x.c() * k * k;
  const std::size_t hw = x.plane();
  Tensor4<T> out(x.n(), F, x.h(), x.w());
  const Eigen::Map<const RowMat<T>> wm(weight.data(), static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(ckk));

  parallel_for(x.n(), [&](std::size_t n0, std::size_t n1) {
    std::vector<T> cols(ckk * hw);
    for (std::size_t n = n0; n < n1; ++n) {
      im2col(x.data() + n * x.sample_size(), x.c(), x.h(), x.w(), k, cols.data());
      const Eigen::Map<const RowMat<T>> cm(cols.data(), static_cast<Eigen::Index>(ckk), static_cast<Eigen::Index>(hw));
      Eigen::Map<RowMat<T>> om(out.data() + n * out.sample_size(), static_cast<Eigen::Index>(F),
                               static_cast<Eigen::Index>(hw));
      om.noalias() = wm * cm;
      if (!bias.empty()) {
        for (std::size_t f = 0; f < F; ++f) om.row(static_cast<Eigen::Index>(f)).array() += bias[f];
      }
    }
  });
  return out;
}

template <class T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& grad_out, const Tensor4<T>& x, const Tensor4<T>& weight,
                             bool need_grad_x) {
  check_conv_shapes(x, weight);
  const std::size_t F = weight.n();
  if (grad_out.n() != x.n() || grad_out.c() != F || grad_out.h() != x.h() || grad_out.w() != x.w()) {
    throw InvalidArgument("conv2d_backward: grad_out shape " + grad_out.shape_string() + " inconsistent with input " +
                          x.shape_string());
  }
  const std::size_t k = weight.h();
  const std::size_t ckk = x.c() * k * k;
  const std::size_t hw = x.plane();
  const std::size_t N = x.n();

  ConvGrads<T> g;
  g.grad_weight = Tensor4<T>(weight.n(), weight.c(), k, k);
  g.grad_bias.assign(F, T(0));
  if (need_grad_x) g.grad_x = Tensor4<T>(x.n(), x.c(), x.h(), x.w());

  const Eigen::Map<const RowMat<T>> wm(weight.data(), static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(ckk));
  std::vector<std::vector<T>> per_sample(N, std::vector<T>(F * ckk));

  parallel_for(N, [&](std::size_t n0, std::size_t n1) {
    std::vector<T> cols(ckk * hw);
    std::vector<T> gcols(need_grad_x ? ckk * hw : 0);
    for (std::size_t n = n0; n < n1; ++n) {
      im2col(x.data() + n * x.sample_size(), x.c(), x.h(), x.w(), k, cols.data());
      const Eigen::Map<const RowMat<T>> cm(cols.data(), static_cast<Eigen::Index>(ckk), static_cast<Eigen::Index>(hw));
      const Eigen::Map<const RowMat<T>> gom(grad_out.data() + n * grad_out.sample_size(), static_cast<Eigen::Index>(F),
                                            static_cast<Eigen::Index>(hw));
      Eigen::Map<RowMat<T>> gw(per_sample[n].data(), static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(ckk));
      gw.noalias() = gom * cm.transpose();
      if (need_grad_x) {
        Eigen::Map<RowMat<T>> gcm(gcols.data(), static_cast<Eigen::Index>(ckk), static_cast<Eigen::Index>(hw));
        gcm.noalias() = wm.transpose() * gom;
        col2im(gcols.data(), x.c(), x.h(), x.w(), k, g.grad_x.data() + n * x.sample_size());
      }
    }
  });

  for (std::size_t n = 0; n < N; ++n) {
    const auto& part = per_sample[n];
    for (std::size_t i = 0; i < part.size(); ++i) g.grad_weight[i] += part[i];
  }
  for (std::size_t f = 0; f < F; ++f) {
    double acc = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* go = grad_out.data() + (n * F + f) * hw;
      for (std::size_t i = 0; i < hw; ++i) acc += go[i];
    }
    g.grad_bias[f] = static_cast<T>(acc);
  }
  return g;
}

template <class T>
Tensor4<T> batchnorm_forward_train(const Tensor4<T>& x, BatchNormParams<T>& params, double epsilon, double momentum,
                                   BatchNormCache<T>& cache, bool update_running) {
  const std::size_t C = x.c();
  if (params.channels() != C) throw InvalidArgument("batchnorm: channel count mismatch");
  const std::size_t hw = x.plane();
  const std::size_t m = x.n() * hw;
  if (m < 2) throw InvalidArgument("batchnorm: training mode needs at least 2 samples per channel");
  cache.mean.assign(C, 0.0);
  cache.inv_std.assign(C, 0.0);
  Tensor4<T> y(x.n(), C, x.h(), x.w());
  for (std::size_t c = 0; c < C; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* p = x.data() + (n * C + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) sum += p[i];
    }
    const double mean = sum / static_cast<double>(m);
    double sq = 0.0;
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* p = x.data() + (n * C + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double d = p[i] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(m);
    const double inv_std = 1.0 / std::sqrt(var + epsilon);
    cache.mean[c] = mean;
    cache.inv_std[c] = inv_std;
    const double g = params.gamma[c];
    const double b = params.beta[c];
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* p = x.data() + (n * C + c) * hw;
      T* q = y.data() + (n * C + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) q[i] = static_cast<T>(g * ((p[i] - mean) * inv_std) + b);
    }
    if (update_running) {
      const double unbiased = sq / static_cast<double>(m - 1);
      params.running_mean[c] = static_cast<T>((1.0 - momentum) * params.running_mean[c] + momentum * mean);
      params.running_var[c] = static_cast<T>((1.0 - momentum) * params.running_var[c] + momentum * unbiased);
    }
  }
  return y;
}

template <class T>
Tensor4<T> batchnorm_forward_infer(const Tensor4<T>& x, const BatchNormParams<T>& params, double epsilon) {
  const std::size_t C = x.c();
  if (params.channels() != C) throw InvalidArgument("batchnorm: channel count mismatch");
  const std::size_t hw = x.plane();
  Tensor4<T> y(x.n(), C, x.h(), x.w());
  for (std::size_t c = 0; c < C; ++c) {
    const double scale = params.gamma[c] / std::sqrt(static_cast<double>(params.running_var[c]) + epsilon);
    const double shift = params.beta[c] - scale * params.running_mean[c];
    const T s = static_cast<T>(scale);
    const T b = static_cast<T>(shift);
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* p = x.data() + (n * C + c) * hw;
      T* q = y.data() + (n * C + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) q[i] = s * p[i] + b;
    }
  }
  return y;
}

template <class T>
BatchNormGrads<T> batchnorm_backward(const Tensor4<T>& grad_y, const Tensor4<T>& x, const BatchNormParams<T>& params,
                                     const BatchNormCache<T>& cache) {
  if (!grad_y.same_shape(x)) throw InvalidArgument("batchnorm_backward: shape mismatch");
  const std::size_t C = x.c();
  const std::size_t hw = x.plane();
  const double m = static_cast<double>(x.n() * hw);
  BatchNormGrads<T> g;
  g.grad_x = Tensor4<T>(x.n(), C, x.h(), x.w());
  g.grad_gamma.assign(C, T(0));
  g.grad_beta.assign(C, T(0));
  for (std::size_t c = 0; c < C; ++c) {
    const double mean = cache.mean[c];
    const double inv_std = cache.inv_std[c];
    double dbeta = 0.0;
    double dgamma = 0.0;
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* p = x.data() + (n * C + c) * hw;
      const T* gy = grad_y.data() + (n * C + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        dbeta += gy[i];
        dgamma += gy[i] * ((p[i] - mean) * inv_std);
      }
    }
    g.grad_beta[c] = static_cast<T>(dbeta);
    g.grad_gamma[c] = static_cast<T>(dgamma);
    const double scale = params.gamma[c] * inv_std / m;
    for (std::size_t n = 0; n < x.n(); ++n) {
      const T* p = x.data() + (n * C + c) * hw;
      const T* gy = grad_y.data() + (n * C + c) * hw;
      T* gx = g.grad_x.data() + (n * C + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double xhat = (p[i] - mean) * inv_std;
        gx[i] = static_cast<T>(scale * (m * gy[i] - dbeta - xhat * dgamma));
      }
    }
  }
  return g;
}

template <class T>
void relu_inplace(Tensor4<T>& x) {
  for (auto& v : x.values()) v = v > T(0) ? v : T(0);
}

template <class T>
void relu_backward_inplace(Tensor4<T>& grad, const Tensor4<T>& relu_output) {
  if (!grad.same_shape(relu_output)) throw InvalidArgument("relu_backward: shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(relu_output[i] > T(0))) grad[i] = T(0);
  }
}

#define POLSAR_INSTANTIATE_LAYERS(T)                                                                             \
  template Tensor4<T> conv2d_forward<T>(const Tensor4<T>&, const Tensor4<T>&, std::span<const T>);              \
  template ConvGrads<T> conv2d_backward<T>(const Tensor4<T>&, const Tensor4<T>&, const Tensor4<T>&, bool);      \
  template Tensor4<T> batchnorm_forward_train<T>(const Tensor4<T>&, BatchNormParams<T>&, double, double,        \
                                                 BatchNormCache<T>&, bool);                                     \
  template Tensor4<T> batchnorm_forward_infer<T>(const Tensor4<T>&, const BatchNormParams<T>&, double);         \
  template BatchNormGrads<T> batchnorm_backward<T>(const Tensor4<T>&, const Tensor4<T>&,                        \
                                                   const BatchNormParams<T>&, const BatchNormCache<T>&);        \
  template void relu_inplace<T>(Tensor4<T>&);                                                                   \
  template void relu_backward_inplace<T>(Tensor4<T>&, const Tensor4<T>&);

POLSAR_INSTANTIATE_LAYERS(float)
POLSAR_INSTANTIATE_LAYERS(double)

#undef POLSAR_INSTANTIATE_LAYERS

}  // namespace polsar::nn
