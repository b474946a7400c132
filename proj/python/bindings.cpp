#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "vesselwave/classify.hpp"
#include "vesselwave/error.hpp"
#include "vesselwave/eval.hpp"
#include "vesselwave/features.hpp"
#include "vesselwave/imageio.hpp"
#include "vesselwave/model.hpp"
#include "vesselwave/synth.hpp"
#include "vesselwave/wavelet.hpp"

namespace py = pybind11;
namespace vw = vesselwave;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

vw::Image to_image(const RealArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array (rows, columns)");
  vw::Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.values().data(), a.data(), img.size() * sizeof(double));
  return img;
}

// Accepts any array-like of bools or integers; nonzero means set.
ByteArray to_bytes(const py::object& in) {
  const py::object np = py::module_::import("numpy");
  return py::array::ensure(np.attr("asarray")(in).attr("astype")("uint8"));
}

vw::Mask to_mask(const py::object& in) {
  ByteArray a = to_bytes(in);
  if (!a || a.ndim() != 2) throw py::value_error("expected a 2-D mask");
  vw::Mask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = a.data()[i] != 0;
  return m;
}

py::array_t<double> from_image(const vw::Image& img) {
  py::array_t<double> out({img.height(), img.width()});
  std::memcpy(out.mutable_data(), img.values().data(), img.size() * sizeof(double));
  return out;
}

py::array_t<bool> from_mask(const vw::Mask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  bool* dst = out.mutable_data();
  for (std::size_t i = 0; i < m.size(); ++i) dst[i] = m[i] != 0;
  return out;
}

py::array_t<std::complex<double>> from_complex(const vw::ComplexMap& c) {
  py::array_t<std::complex<double>> out({c.height(), c.width()});
  std::memcpy(out.mutable_data(), c.values().data(), c.size() * sizeof(std::complex<double>));
  return out;
}

vw::MorletParams morlet_params(double epsilon, std::array<double, 2> k0, double angle_step,
                               double c_psi) {
  vw::MorletParams p;
  p.epsilon = epsilon;
  p.k0 = k0;
  p.angles = vw::angle_sweep(angle_step);
  p.c_psi = c_psi;
  return p;
}

vw::TrainingSet training_set(const RealArray& samples, const py::object& labels) {
  if (samples.ndim() != 2) throw py::value_error("samples must be (n, d)");
  ByteArray lab = to_bytes(labels);
  if (!lab || lab.ndim() != 1 || lab.shape(0) != samples.shape(0)) {
    throw py::value_error("labels must be a 1-D array with one entry per sample");
  }
  vw::TrainingSet ts;
  ts.samples = Eigen::Map<const vw::RowMatrix>(samples.data(), samples.shape(0), samples.shape(1));
  ts.labels.assign(lab.data(), lab.data() + lab.shape(0));
  return ts;
}

py::array_t<double> score_rows(const RealArray& samples, int dim,
                               const std::function<double(const double*)>& f) {
  if (samples.ndim() != 2 || samples.shape(1) != dim) {
    throw py::value_error("samples must be (n, " + std::to_string(dim) + ")");
  }
  py::array_t<double> out(samples.shape(0));
  for (py::ssize_t i = 0; i < samples.shape(0); ++i) {
    out.mutable_data()[i] = f(samples.data() + i * dim);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_vesselwave, m) {
  m.doc() = "Morlet wavelet features, GMM/LMSE pixel classifiers and ROC evaluation";

  static py::exception<vw::Error> error(m, "VesselwaveError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const vw::Error& e) {
      py::set_error(error, (std::string(vw::to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  // imageio
  m.def("load_channel", [](const std::filesystem::path& path, const std::string& channel) {
    return from_image(vw::load_channel(path, vw::parse_channel(channel)));
  }, py::arg("path"), py::arg("channel") = "green");
  m.def("load_mask", [](const std::filesystem::path& path) { return from_mask(vw::load_mask(path)); },
        py::arg("path"));
  m.def("invert", [](const RealArray& img) { return from_image(vw::invert(to_image(img))); });
  m.def("derive_mask", [](const RealArray& img, double threshold, int radius) {
    return from_mask(vw::derive_mask(to_image(img), threshold, radius));
  }, py::arg("image"), py::arg("threshold") = 0.1, py::arg("erosion_radius") = 3);
  m.def("extend_border", [](const RealArray& img, const py::object& mask, int iterations) {
    auto ext = vw::extend_border(to_image(img), to_mask(mask), iterations);
    return py::make_tuple(from_image(ext.image), from_mask(ext.mask));
  }, py::arg("image"), py::arg("mask"), py::arg("iterations"));

  // wavelet
  m.def("morlet_kernel", [](double scale, double angle, int halfwidth, double epsilon,
                            std::array<double, 2> k0) {
    vw::MorletParams p;
    p.epsilon = epsilon;
    p.k0 = k0;
    if (halfwidth < 0) halfwidth = vw::kernel_halfwidth(p, scale);
    return from_complex(vw::morlet_kernel(p, scale, angle, halfwidth));
  }, py::arg("scale"), py::arg("angle"), py::arg("halfwidth") = -1, py::arg("epsilon") = 8.0,
     py::arg("k0") = std::array<double, 2>{0.0, 3.0});
  m.def("cwt_response", [](const RealArray& img, double scale, double angle, double epsilon,
                           std::array<double, 2> k0, double c_psi) {
    return from_complex(vw::cwt_response(to_image(img), morlet_params(epsilon, k0, 10.0, c_psi),
                                         scale, angle));
  }, py::arg("image"), py::arg("scale"), py::arg("angle"), py::arg("epsilon") = 8.0,
     py::arg("k0") = std::array<double, 2>{0.0, 3.0}, py::arg("c_psi") = 1.0);
  m.def("max_modulus", [](const RealArray& img, double scale, double epsilon,
                          std::array<double, 2> k0, double angle_step) {
    return from_image(vw::max_modulus(to_image(img), morlet_params(epsilon, k0, angle_step, 1.0),
                                      scale));
  }, py::arg("image"), py::arg("scale"), py::arg("epsilon") = 8.0,
     py::arg("k0") = std::array<double, 2>{0.0, 3.0}, py::arg("angle_step") = 10.0);

  // features
  m.def("build_features", [](const RealArray& img, const py::object& mask,
                             std::vector<double> scales, double epsilon, std::array<double, 2> k0,
                             double angle_step, bool normalized) {
    const vw::Image image = to_image(img);
    const vw::Mask fov = to_mask(mask);
    vw::FeatureStack stack =
        vw::build_stack(image, fov, morlet_params(epsilon, k0, angle_step, 1.0), scales);
    if (normalized) stack = vw::normalize(stack, fov).stack;
    py::array_t<double> out({stack.n_features(), stack.height, stack.width});
    for (int f = 0; f < stack.n_features(); ++f) {
      std::memcpy(out.mutable_data(f), stack.planes[static_cast<std::size_t>(f)].values().data(),
                  image.size() * sizeof(double));
    }
    return out;
  }, py::arg("image"), py::arg("mask"), py::arg("scales") = std::vector<double>{2, 3, 4, 6},
     py::arg("epsilon") = 8.0, py::arg("k0") = std::array<double, 2>{0.0, 3.0},
     py::arg("angle_step") = 10.0, py::arg("normalized") = true);

  // classify
  py::class_<vw::GmmModel>(m, "GmmModel")
      .def_readonly("dim", &vw::GmmModel::dim)
      .def_property_readonly("priors", [](const vw::GmmModel& g) {
        return std::vector<double>{g.priors[0], g.priors[1]};
      })
      .def("components", [](const vw::GmmModel& g, int cls) {
        py::list out;
        for (const auto& c : g.classes.at(static_cast<std::size_t>(cls)).components) {
          out.append(py::dict(py::arg("weight") = c.weight, py::arg("mean") = c.mean,
                              py::arg("cov") = c.cov));
        }
        return out;
      }, py::arg("cls"), "components of class 0 (vessel) or 1 (non-vessel)")
      .def("posterior", [](const vw::GmmModel& g, const RealArray& samples) {
        const vw::GmmPosterior post(g);
        return score_rows(samples, g.dim, [&](const double* v) { return post(v); });
      });
  m.def("fit_gmm", [](const RealArray& samples, const py::object& labels, int k,
                      std::uint64_t seed, double tol, int max_iter) {
    vw::EmOptions opt;
    opt.k = k;
    opt.seed = seed;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return vw::fit_gmm(training_set(samples, labels), opt);
  }, py::arg("samples"), py::arg("labels"), py::arg("k") = 20, py::arg("seed") = 1,
     py::arg("tol") = 1e-6, py::arg("max_iter") = 500);
  m.def("fit_mixture", [](const RealArray& samples, int k, std::uint64_t seed) {
    vw::EmOptions opt;
    opt.k = k;
    opt.seed = seed;
    const vw::EmResult r = vw::fit_mixture(
        Eigen::Map<const vw::RowMatrix>(samples.data(), samples.shape(0), samples.shape(1)), opt);
    py::list comps;
    for (const auto& c : r.mixture.components) {
      comps.append(py::dict(py::arg("weight") = c.weight, py::arg("mean") = c.mean,
                            py::arg("cov") = c.cov));
    }
    return py::dict(py::arg("components") = comps, py::arg("log_likelihood") = r.log_likelihood,
                    py::arg("converged") = r.converged);
  }, py::arg("samples"), py::arg("k"), py::arg("seed") = 1);

  py::class_<vw::LmseModel>(m, "LmseModel")
      .def_readonly("w", &vw::LmseModel::w)
      .def_readonly("w0", &vw::LmseModel::w0)
      .def("score", [](const vw::LmseModel& l, const RealArray& samples) {
        const auto d = static_cast<int>(l.w.size());
        return score_rows(samples, d, [&](const double* v) {
          return vw::lmse_score(l, std::span<const double>(v, static_cast<std::size_t>(d)));
        });
      });
  m.def("fit_lmse", [](const RealArray& samples, const py::object& labels) {
    return vw::fit_lmse(training_set(samples, labels));
  }, py::arg("samples"), py::arg("labels"));

  // eval
  m.def("roc", [](const RealArray& scores, const py::object& labels) {
    ByteArray lab = to_bytes(labels);
    if (scores.ndim() != 1 || !lab || lab.ndim() != 1) {
      throw py::value_error("scores and labels must be 1-D");
    }
    const vw::RocCurve c = vw::roc_from_scores(
        std::span<const double>(scores.data(), static_cast<std::size_t>(scores.shape(0))),
        std::span<const std::uint8_t>(lab.data(), static_cast<std::size_t>(lab.shape(0))));
    std::vector<double> t, fpf, tpf;
    for (const auto& p : c.points) {
      t.push_back(p.threshold);
      fpf.push_back(p.fpf);
      tpf.push_back(p.tpf);
    }
    return py::dict(py::arg("threshold") = t, py::arg("fpf") = fpf, py::arg("tpf") = tpf,
                    py::arg("az") = c.az);
  }, py::arg("scores"), py::arg("labels"));
  m.def("confusion", [](const py::object& seg, const py::object& truth, const py::object& fov) {
    const vw::Confusion c = vw::confusion(to_mask(seg), to_mask(truth), to_mask(fov));
    return py::dict(py::arg("tp") = c.tp, py::arg("fp") = c.fp, py::arg("tn") = c.tn,
                    py::arg("fn") = c.fn);
  }, py::arg("segmentation"), py::arg("truth"), py::arg("fov"));

  // synthetic data
  m.def("synthesize", [](std::uint64_t seed, int index, int size) {
    vw::SynthOptions opt;
    opt.seed = seed;
    opt.size = size;
    const vw::SynthSample s = vw::generate_synthetic(opt, index);
    py::array_t<std::uint8_t> rgb({s.rgb.height, s.rgb.width, 3});
    std::memcpy(rgb.mutable_data(), s.rgb.data.data(), s.rgb.data.size());
    return py::dict(py::arg("stem") = s.stem, py::arg("rgb") = rgb,
                    py::arg("truth") = from_mask(s.truth), py::arg("fov") = from_mask(s.fov));
  }, py::arg("seed") = 42, py::arg("index") = 0, py::arg("size") = 256);

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "0.1.0";
#endif
}
