#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <optional>
#include <vector>

#include "polsar/change_detect.hpp"
#include "polsar/dncnn/inference.hpp"
#include "polsar/metrics.hpp"
#include "polsar/parallel.hpp"
#include "polsar/raster_io.hpp"
#include "polsar/speckle_sim.hpp"
#include "polsar/transform.hpp"

namespace py = pybind11;
using namespace polsar;

namespace {

using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Covariance rasters cross the boundary as (H, W, 2, 2) complex arrays.
C2Raster c2_from_numpy(const CArray& a) {
  if (a.ndim() != 4 || a.shape(2) != 2 || a.shape(3) != 2) throw InvalidArgument("expected an (H, W, 2, 2) array");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  C2Raster out(h, w);
  const auto* p = a.data();
  for (std::size_t i = 0; i < h * w; ++i) {
    out[i].c11 = p[4 * i].real();
    out[i].c12 = p[4 * i + 1];
    out[i].c22 = p[4 * i + 3].real();
  }
  return out;
}

CArray c2_to_numpy(const C2Raster& c2) {
  CArray a({c2.height(), c2.width(), std::size_t{2}, std::size_t{2}});
  auto* p = a.mutable_data();
  for (std::size_t i = 0; i < c2.size(); ++i) {
    p[4 * i] = c2[i].c11;
    p[4 * i + 1] = c2[i].c12;
    p[4 * i + 2] = std::conj(c2[i].c12);
    p[4 * i + 3] = c2[i].c22;
  }
  return a;
}

// Band stacks as (4, H, W) float64.
BandStack bands_from_numpy(const DArray& a) {
  if (a.ndim() != 3 || a.shape(0) != 4) throw InvalidArgument("expected a (4, H, W) array");
  const auto h = static_cast<std::size_t>(a.shape(1));
  const auto w = static_cast<std::size_t>(a.shape(2));
  BandStack out(h, w);
  const auto* p = a.data();
  for (std::size_t b = 0; b < 4; ++b) {
    std::copy(p + b * h * w, p + (b + 1) * h * w, out.band(b).pixels().begin());
  }
  return out;
}

DArray bands_to_numpy(const BandStack& bs) {
  DArray a({std::size_t{4}, bs.height(), bs.width()});
  auto* p = a.mutable_data();
  const std::size_t n = bs.height() * bs.width();
  for (std::size_t b = 0; b < 4; ++b) std::copy(bs.band(b).pixels().begin(), bs.band(b).pixels().end(), p + b * n);
  return a;
}

RealImage real_from_numpy(const DArray& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D array");
  RealImage out(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), out.pixels().begin());
  return out;
}

template <class T>
py::array_t<T> grid_to_numpy(const Grid<T>& g) {
  py::array_t<T> a({g.height(), g.width()});
  std::copy(g.pixels().begin(), g.pixels().end(), a.mutable_data());
  return a;
}

RegionOfInterest roi_of(const std::optional<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>>& r,
                        std::size_t h, std::size_t w) {
  if (!r) return RegionOfInterest::whole(h, w);
  const auto [r0, c0, rh, rw] = *r;
  return {r0, c0, rh, rw, "roi"};
}

using RoiArg = std::optional<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>>;

}  // namespace

PYBIND11_MODULE(_polsar, m) {
  m.doc() = "Dual-pol SAR covariance despeckling core";

  // translators run last-registered first: the base class goes in first
  const auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", base.ptr());

  m.def("thread_count", &thread_count);
  m.def("set_thread_count", &set_thread_count, py::arg("n"));

  m.def(
      "forward_transform",
      [](const CArray& c2, bool project) {
        return bands_to_numpy(transform_raster(c2_from_numpy(c2), project ? PsdPolicy::project : PsdPolicy::reject));
      },
      py::arg("c2"), py::arg("project_psd") = false, "(H, W, 2, 2) covariance -> (4, H, W) intensities");
  m.def(
      "inverse_transform",
      [](const DArray& bands, bool repair) { return c2_to_numpy(untransform_raster(bands_from_numpy(bands), repair)); },
      py::arg("bands"), py::arg("repair_psd") = false);
  m.def(
      "project_psd",
      [](const CArray& c2) {
        C2Raster r = c2_from_numpy(c2);
        for (auto& px : r.pixels()) px = project_psd(px);
        return c2_to_numpy(r);
      },
      py::arg("c2"));
  m.def(
      "boxcar_multilook",
      [](const CArray& c2, std::size_t az, std::size_t rg) { return c2_to_numpy(boxcar_multilook(c2_from_numpy(c2), az, rg)); },
      py::arg("c2"), py::arg("win_az"), py::arg("win_rg"));

  m.def(
      "simulate",
      [](const CArray& truth, std::uint64_t seed, std::size_t epoch, std::size_t looks) {
        return c2_to_numpy(simulate_from_truth(c2_from_numpy(truth), seed, epoch, looks));
      },
      py::arg("truth"), py::arg("seed"), py::arg("epoch") = 0, py::arg("looks") = 1);

  m.def(
      "omnibus_lnq",
      [](const CArray& mats, double n) {
        if (mats.ndim() != 3 || mats.shape(1) != 2 || mats.shape(2) != 2) throw InvalidArgument("expected (k, 2, 2)");
        std::vector<Cov2> v(static_cast<std::size_t>(mats.shape(0)));
        for (std::size_t i = 0; i < v.size(); ++i) {
          v[i].c11 = mats.at(i, 0, 0).real();
          v[i].c12 = mats.at(i, 0, 1);
          v[i].c22 = mats.at(i, 1, 1).real();
        }
        return omnibus_lnq(v, n);
      },
      py::arg("mats"), py::arg("n"));
  m.def(
      "change_probability",
      [](double lnq, std::size_t k, double n) {
        OmnibusParams p;
        p.k = k;
        p.n = n;
        return change_probability(lnq, p);
      },
      py::arg("lnq"), py::arg("k"), py::arg("n"));
  m.def("chi2_cdf", &chi2_cdf, py::arg("z"), py::arg("dof"));
  m.def(
      "change_mask",
      [](const std::vector<CArray>& epochs, std::size_t az, std::size_t rg, std::optional<double> looks,
         double significance) {
        TemporalStack st;
        for (std::size_t i = 0; i < epochs.size(); ++i) {
          st.epochs.push_back(c2_from_numpy(epochs[i]));
          st.dates.push_back(add_days("2021-01-01", static_cast<int>(12 * i)));
        }
        ChangeMaskOptions o;
        o.win_az = az;
        o.win_rg = rg;
        o.looks = looks ? *looks : static_cast<double>(az * rg);
        o.significance = significance;
        const ChangeMask cm = change_mask(st, o);
        return py::make_tuple(grid_to_numpy(cm.mask), grid_to_numpy(cm.prob));
      },
      py::arg("epochs"), py::arg("win_az") = 4, py::arg("win_rg") = 19, py::arg("looks") = py::none(),
      py::arg("significance") = 1e-10, "Returns (mask uint8, probability float64)");

  m.def(
      "enl",
      [](const CArray& c2, RoiArg roi) {
        const C2Raster r = c2_from_numpy(c2);
        return enl(r, roi_of(roi, r.height(), r.width())).value;
      },
      py::arg("c2"), py::arg("roi") = py::none(), "roi = (row0, col0, height, width); inf for a constant region");
  m.def(
      "epd_roa",
      [](const CArray& original, const CArray& filtered, RoiArg roi) {
        const C2Raster o = c2_from_numpy(original);
        return epd_roa_combined(o, c2_from_numpy(filtered), roi_of(roi, o.height(), o.width()));
      },
      py::arg("original"), py::arg("filtered"), py::arg("roi") = py::none());
  m.def(
      "ssim",
      [](const DArray& x, const DArray& y, std::size_t window, double dynamic_range, bool squared, RoiArg roi) {
        const RealImage a = real_from_numpy(x);
        SsimOptions o;
        o.window = window;
        o.dynamic_range = dynamic_range;
        o.constants = squared ? SsimConstants::squared : SsimConstants::linear;
        return ssim(a, real_from_numpy(y), roi_of(roi, a.height(), a.width()), o);
      },
      py::arg("x"), py::arg("y"), py::arg("window") = 8, py::arg("dynamic_range") = 1.0, py::arg("squared") = false,
      py::arg("roi") = py::none());

  m.def(
      "read_raster",
      [](const std::string& path) -> py::object {
        const AnyRaster r = read_raster(path);
        if (auto* c = std::get_if<C2Raster>(&r)) return c2_to_numpy(*c);
        if (auto* b = std::get_if<BandStack>(&r)) return bands_to_numpy(*b);
        if (auto* mk = std::get_if<MaskImage>(&r)) return grid_to_numpy(*mk);
        return grid_to_numpy(std::get<RealImage>(r));
      },
      py::arg("path"));
  m.def(
      "write_covariance",
      [](const std::string& path, const CArray& c2, bool f32) {
        write_raster(c2_from_numpy(c2), path, f32 ? Precision::f32 : Precision::f64);
      },
      py::arg("path"), py::arg("c2"), py::arg("f32") = false);
  m.def(
      "despeckle",
      [](const CArray& c2, const std::string& checkpoint, std::size_t tile, std::size_t overlap, bool repair) {
        const nn::NetworkModel model = nn::load_checkpoint(checkpoint);
        const C2Raster in = c2_from_numpy(c2);
        nn::DespeckleOptions o{tile, overlap, repair};
        C2Raster out;
        {
          py::gil_scoped_release release;
          out = nn::despeckle_raster(in, model, o);
        }
        return c2_to_numpy(out);
      },
      py::arg("c2"), py::arg("checkpoint"), py::arg("tile") = 256, py::arg("overlap") = 16,
      py::arg("repair_psd") = true);
}
