#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polsar/error.hpp"

namespace polsar::nn {

/// Dense N x C x H x W tensor, row-major (NCHW).
template <class T>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T{})
      : n_(n), c_(c), h_(h), w_(w), data_(n * c * h * w, fill) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t c() const noexcept { return c_; }
  std::size_t h() const noexcept { return h_; }
  std::size_t w() const noexcept { return w_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane() const noexcept { return h_ * w_; }
  std::size_t sample_size() const noexcept { return c_ * h_ * w_; }

  T& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * c_ + c) * h_ + y) * w_ + x];
  }
  const T& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * c_ + c) * h_ + y) * w_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::span<T> sample(std::size_t n) { return {data_.data() + n * sample_size(), sample_size()}; }
  std::span<const T> sample(std::size_t n) const { return {data_.data() + n * sample_size(), sample_size()}; }

  bool same_shape(const Tensor4& o) const noexcept { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  std::string shape_string() const {
    return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" + std::to_string(w_);
  }

  template <class U>
  Tensor4<U> cast() const {
    Tensor4<U> out(n_, c_, h_, w_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> data_;
};

}  // namespace polsar::nn
