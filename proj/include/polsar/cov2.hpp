#pragma once

#include <complex>
#include <cmath>

namespace polsar {

/// 2x2 Hermitian dual-pol covariance matrix [[c11, c12], [conj(c12), c22]].
/// Channel 1 is VV, channel 2 is VH; c12 = E{S_vv * conj(S_vh)}.
struct Cov2 {
  double c11 = 0.0;
  double c22 = 0.0;
  std::complex<double> c12{0.0, 0.0};

  std::complex<double> c21() const noexcept { return std::conj(c12); }
  double trace() const noexcept { return c11 + c22; }
  double det() const noexcept { return c11 * c22 - std::norm(c12); }
  /// tr(C*C) for a Hermitian 2x2 matrix.
  double trace_of_square() const noexcept { return c11 * c11 + c22 * c22 + 2.0 * std::norm(c12); }

  Cov2& operator+=(const Cov2& o) noexcept {
    c11 += o.c11;
    c22 += o.c22;
    c12 += o.c12;
    return *this;
  }
  Cov2& operator*=(double s) noexcept {
    c11 *= s;
    c22 *= s;
    c12 *= s;
    return *this;
  }
  friend Cov2 operator+(Cov2 a, const Cov2& b) noexcept { return a += b; }
  friend Cov2 operator*(Cov2 a, double s) noexcept { return a *= s; }
  friend Cov2 operator*(double s, Cov2 a) noexcept { return a *= s; }
  friend bool operator==(const Cov2&, const Cov2&) = default;
};

/// Relative tolerance of the positive semi-definiteness predicate.
inline constexpr double kPsdTolerance = 1e-9;

/// c11 >= 0, c22 >= 0 and |c12|^2 <= c11*c22, each up to `tol` relative to the matrix scale.
inline bool is_psd(const Cov2& c, double tol = kPsdTolerance) noexcept {
  const double scale = std::abs(c.c11) + std::abs(c.c22);
  if (!std::isfinite(scale) || !std::isfinite(c.c12.real()) || !std::isfinite(c.c12.imag())) return false;
  if (c.c11 < -tol * scale || c.c22 < -tol * scale) return false;
  return std::norm(c.c12) - c.c11 * c.c22 <= tol * scale * scale;
}

}  // namespace polsar
