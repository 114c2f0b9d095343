#pragma once

#include <cstddef>
#include <span>

#include "polsar/raster.hpp"

namespace polsar {

/// Parameters of the k-epoch Wishart equality test with Box's chi-square mixture
/// approximation of -2 rho ln Q.
struct OmnibusParams {
  std::size_t k = 2;       ///< number of epochs
  std::size_t p = 2;       ///< polarimetric dimension
  double n = 1.0;          ///< equivalent number of looks
  double significance = 1e-10;

  /// f = (k-1) p^2
  double dof() const;
  /// rho = 1 - (2p^2-1) / (6(k-1)p) * (k/n - 1/(nk))
  double rho() const;
  /// omega2 = p^2(p^2-1)/(24p^2) * (k/n^2 - 1/(nk)^2) - p^2(k-1)/4 * (1 - 1/rho)^2
  double omega2() const;

  /// Throws InvalidArgument for k < 2, n <= 0, significance outside (0,1) or rho <= 0.
  void validate() const;
};

/// ln Q = n (p k ln k + sum ln|C_i| - k ln|sum C_i|) with p = 2. Always <= 0.
/// Throws SingularMatrixError naming the epoch whose determinant is not positive
/// (epoch -1 for the summed matrix).
double omnibus_lnq(std::span<const Cov2> mats, double n);

/// P(chi^2(dof) <= z), the regularized lower incomplete gamma P(dof/2, z/2).
double chi2_cdf(double z, double dof);
/// 1 - chi2_cdf(z, dof), accurate in the upper tail.
double chi2_sf(double z, double dof);

/// P(-2 rho ln Q <= z) at z = -2 rho lnq, clamped to [0, 1].
double change_probability(double lnq, const OmnibusParams& params);

struct ChangeMask {
  MaskImage mask;   ///< 1 = changed
  RealImage prob;   ///< change probability P(-2 rho ln Q <= z)
  double significance = 1e-10;
  std::size_t singular_pixels = 0;  ///< pixels flagged because some determinant was not positive

  /// The mask implied by `prob` and `significance` (prob > 1 - significance);
  /// singular pixels are stored with prob = 1.
  MaskImage threshold() const;
};

struct ChangeMaskOptions {
  std::size_t win_az = 4;
  std::size_t win_rg = 19;
  /// Equivalent looks of a full window. Border pixels whose window is truncated use
  /// looks scaled by the fraction of the window inside the image.
  double looks = 76.0;
  double significance = 1e-10;
};

/// Boxcar-multilooks every epoch, then evaluates the omnibus test per pixel.
ChangeMask change_mask(const TemporalStack& stack, const ChangeMaskOptions& opts);

}  // namespace polsar
