#include "polsar/change_detect.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "polsar/parallel.hpp"
#include "polsar/transform.hpp"

namespace polsar {

double OmnibusParams::dof() const { return static_cast<double>((k - 1) * p * p); }

double OmnibusParams::rho() const {
  const double kk = static_cast<double>(k);
  const double pp = static_cast<double>(p);
  return 1.0 - (2.0 * pp * pp - 1.0) / (6.0 * (kk - 1.0) * pp) * (kk / n - 1.0 / (n * kk));
}

double OmnibusParams::omega2() const {
  const double kk = static_cast<double>(k);
  const double p2 = static_cast<double>(p * p);
  const double r = rho();
  const double nk = n * kk;
  return p2 * (p2 - 1.0) / (24.0 * p2) * (kk / (n * n) - 1.0 / (nk * nk)) -
         p2 * (kk - 1.0) / 4.0 * (1.0 - 1.0 / r) * (1.0 - 1.0 / r);
}

void OmnibusParams::validate() const {
  if (k < 2) throw InvalidArgument("omnibus test needs k >= 2 epochs");
  if (p != 2) throw InvalidArgument("only dual-pol (p = 2) covariance is supported");
  if (!(n > 0.0)) throw InvalidArgument("equivalent number of looks must be positive");
  if (!(significance > 0.0 && significance < 1.0)) throw InvalidArgument("significance must lie in (0, 1)");
  if (!(rho() > 0.0)) {
    throw InvalidArgument("rho = " + std::to_string(rho()) + " <= 0: too few looks (n = " + std::to_string(n) +
                          ") for the chi-square approximation");
  }
}

double omnibus_lnq(std::span<const Cov2> mats, double n) {
  constexpr double p = 2.0;
  const std::size_t k = mats.size();
  if (k < 2) throw InvalidArgument("omnibus test needs k >= 2 matrices");
  Cov2 sum;
  double sum_logdet = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = mats[i].det();
    if (!(d > 0.0)) {
      throw SingularMatrixError("covariance matrix of epoch " + std::to_string(i) + " has non-positive determinant",
                                static_cast<long>(i));
    }
    sum_logdet += std::log(d);
    sum += mats[i];
  }
  const double dsum = sum.det();
  if (!(dsum > 0.0)) throw SingularMatrixError("summed covariance matrix has non-positive determinant", -1);
  const double kk = static_cast<double>(k);
  return n * (p * kk * std::log(kk) + sum_logdet - kk * std::log(dsum));
}

double chi2_cdf(double z, double dof) {
  if (!(z >= 0.0)) throw InvalidArgument("chi-square CDF needs z >= 0");
  if (!(dof > 0.0)) throw InvalidArgument("chi-square CDF needs positive degrees of freedom");
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;
  return boost::math::gamma_p(dof / 2.0, z / 2.0);
}

double chi2_sf(double z, double dof) {
  if (!(z >= 0.0)) throw InvalidArgument("chi-square survival function needs z >= 0");
  if (!(dof > 0.0)) throw InvalidArgument("chi-square survival function needs positive degrees of freedom");
  if (z == 0.0) return 1.0;
  if (std::isinf(z)) return 0.0;
  return boost::math::gamma_q(dof / 2.0, z / 2.0);
}

double change_probability(double lnq, const OmnibusParams& params) {
  params.validate();
  if (lnq > 1e-9) throw InvalidArgument("ln Q must be <= 0, got " + std::to_string(lnq));
  const double z = -2.0 * params.rho() * std::min(lnq, 0.0);
  const double f = params.dof();
  const double pf = chi2_cdf(z, f);
  const double pf4 = chi2_cdf(z, f + 4.0);
  return std::clamp(pf + params.omega2() * (pf4 - pf), 0.0, 1.0);
}

MaskImage ChangeMask::threshold() const {
  MaskImage out(prob.height(), prob.width());
  for (std::size_t i = 0; i < prob.size(); ++i) out[i] = prob[i] > 1.0 - significance ? 1 : 0;
  return out;
}

ChangeMask change_mask(const TemporalStack& stack, const ChangeMaskOptions& opts) {
  stack.validate(2);
  OmnibusParams full{stack.size(), 2, opts.looks, opts.significance};
  full.validate();

  std::vector<C2Raster> looked;
  looked.reserve(stack.size());
  for (const auto& e : stack.epochs) looked.push_back(boxcar_multilook(e, opts.win_az, opts.win_rg));

  const std::size_t h = stack.height();
  const std::size_t w = stack.width();
  const auto window_extent = [](std::size_t pos, std::size_t len, std::size_t win) {
    const std::ptrdiff_t before = static_cast<std::ptrdiff_t>((win - 1) / 2);
    const std::ptrdiff_t after = static_cast<std::ptrdiff_t>(win / 2);
    const auto p = static_cast<std::ptrdiff_t>(pos);
    const auto lo = std::max<std::ptrdiff_t>(0, p - before);
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len) - 1, p + after);
    return static_cast<double>(hi - lo + 1);
  };
  const double full_count = static_cast<double>(opts.win_az * opts.win_rg);

  ChangeMask out;
  out.mask = MaskImage(h, w, 0);
  out.prob = RealImage(h, w, 0.0);
  out.significance = opts.significance;
  std::vector<std::size_t> singular_per_row(h, 0);

  parallel_for(h, [&](std::size_t r0, std::size_t r1) {
    std::vector<Cov2> mats(stack.size());
    for (std::size_t r = r0; r < r1; ++r) {
      const double az = window_extent(r, h, opts.win_az);
      for (std::size_t c = 0; c < w; ++c) {
        for (std::size_t e = 0; e < mats.size(); ++e) mats[e] = looked[e](r, c);
        OmnibusParams params = full;
        params.n = opts.looks * az * window_extent(c, w, opts.win_rg) / full_count;
        double prob = 1.0;
        try {
          params.validate();
          prob = change_probability(std::min(omnibus_lnq(mats, params.n), 0.0), params);
        } catch (const SingularMatrixError&) {
          ++singular_per_row[r];
        } catch (const InvalidArgument&) {
          // too few looks left at this border pixel for a valid approximation
          ++singular_per_row[r];
        }
        out.prob(r, c) = prob;
        out.mask(r, c) = prob > 1.0 - opts.significance ? 1 : 0;
      }
    }
  });
  for (auto s : singular_per_row) out.singular_pixels += s;
  return out;
}

}  // namespace polsar
