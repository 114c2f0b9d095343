#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "polsar/error.hpp"

namespace polsar {

/// Dense row-major 2-D image.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, const T& fill = T{})
      : height_(height), width_(width), data_(height * width, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* context) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidArgument(std::string(context) + ": geometry mismatch (" + std::to_string(a.height()) +
                          "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                          std::to_string(b.width()) + ")");
  }
}

/// Axis-aligned pixel rectangle, half-open.
struct Rect {
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  bool contains(std::size_t r, std::size_t c) const noexcept {
    return r >= row0 && r < row0 + height && c >= col0 && c < col0 + width;
  }
  bool fits(std::size_t img_h, std::size_t img_w) const noexcept {
    return row0 + height <= img_h && col0 + width <= img_w;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace polsar
