#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "implicitsr/checkpoint.hpp"
#include "implicitsr/config.hpp"
#include "implicitsr/dataset.hpp"
#include "implicitsr/denoiser.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/image_io.hpp"
#include "implicitsr/metrics.hpp"
#include "implicitsr/resample.hpp"
#include "implicitsr/rng.hpp"
#include "implicitsr/sampler.hpp"
#include "implicitsr/schedule.hpp"
#include "implicitsr/tensor.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

isr::Tensor to_tensor(const FloatArray& a) {
  std::vector<int64_t> dims(static_cast<size_t>(a.ndim()));
  for (py::ssize_t i = 0; i < a.ndim(); ++i) dims[static_cast<size_t>(i)] = a.shape(i);
  isr::Tensor t(std::move(dims));
  std::copy(a.data(), a.data() + a.size(), t.data.begin());
  return t;
}

py::array_t<float> to_array(const isr::Tensor& t) {
  std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
  py::array_t<float> out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

// Accepts [3,H,W] or [1,3,H,W]; returns a 4-D tensor plus whether the
// batch axis was added.
std::pair<isr::Tensor, bool> as_image4(const FloatArray& a, const char* what) {
  isr::Tensor t = to_tensor(a);
  if (t.dims.size() == 3) {
    t.dims.insert(t.dims.begin(), 1);
    return {std::move(t), true};
  }
  if (t.dims.size() == 4) return {std::move(t), false};
  throw isr::ShapeError(std::string(what) + ": expects [3,H,W] or [1,3,H,W]");
}

isr::VarianceMode variance_from(const std::string& name) {
  if (name == "beta") return isr::VarianceMode::beta;
  if (name == "posterior") return isr::VarianceMode::posterior;
  throw isr::ParamError("variance must be 'beta' or 'posterior'");
}

isr::RunConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw isr::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return isr::RunConfig::from_json(j);
}

// Config + weights + schedule, the inference-side bundle.
class PyModel {
 public:
  PyModel(isr::RunConfig cfg, uint64_t seed)
      : cfg_(std::move(cfg)),
        sched_(isr::build_schedule(cfg_.schedule.steps, cfg_.schedule.beta_start,
                                   cfg_.schedule.beta_end)),
        model_(make_model(cfg_.model, seed)) {}

  static PyModel random(const std::string& config_json, uint64_t seed) {
    return PyModel(config_from_json_text(config_json), seed);
  }

  static PyModel load(const std::string& path) {
    auto ck = isr::Checkpoint::load(path);
    if (!ck.meta.contains("config")) throw isr::CheckpointError("checkpoint has no config");
    isr::RunConfig cfg;
    try {
      cfg = isr::RunConfig::from_json(ck.meta.at("config"));
    } catch (const isr::ConfigError& e) {
      throw isr::CheckpointError(std::string("checkpoint config invalid: ") + e.what());
    }
    PyModel pm(cfg, 0);
    for (auto& [name, p] : pm.model_.params.items) {
      const isr::Tensor& t = ck.find(name);
      if (t.dims != p->value.dims) throw isr::CheckpointError("tensor shape mismatch: " + name);
      p->value = t;
    }
    pm.step_ = ck.meta.value("step", int64_t(0));
    return pm;
  }

  void save(const std::string& path) const {
    isr::Checkpoint ck;
    ck.meta["config"] = cfg_.to_json();
    ck.meta["step"] = step_;
    for (const auto& [name, p] : model_.params.items) ck.tensors.emplace_back(name, p->value);
    ck.save(path);
  }

  py::array_t<float> sample(const FloatArray& x_lr, double s, uint64_t seed,
                            const std::string& variance) const {
    auto [lr, squeezed] = as_image4(x_lr, "sample");
    isr::SamplerConfig sc;
    sc.seed = seed;
    sc.variance = variance.empty() ? bundle_variance() : variance_from(variance);
    isr::Tensor out;
    {
      py::gil_scoped_release release;
      out = isr::sample(lr, s, model_, sched_, sc);
    }
    if (squeezed) out.dims.erase(out.dims.begin());
    return to_array(out);
  }

  std::string config_json() const { return cfg_.to_json().dump(2); }
  int64_t step() const { return step_; }
  int64_t num_parameters() const { return model_.params.total_elements(); }
  const isr::NoiseSchedule& schedule() const { return sched_; }

 private:
  static isr::Denoiser make_model(const isr::DenoiserConfig& mc, uint64_t seed) {
    isr::Rng rng(seed);
    return isr::Denoiser(mc, rng);
  }

  isr::VarianceMode bundle_variance() const {
    return cfg_.sampler.variance == "posterior" ? isr::VarianceMode::posterior
                                                : isr::VarianceMode::beta;
  }

  isr::RunConfig cfg_;
  isr::NoiseSchedule sched_;
  isr::Denoiser model_;
  int64_t step_ = 0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Continuous-scale diffusion super-resolution core";
  m.attr("__version__") = "0.1.0";

  py::class_<isr::NoiseSchedule>(m, "NoiseSchedule")
      .def_readonly("beta", &isr::NoiseSchedule::beta)
      .def_readonly("gamma", &isr::NoiseSchedule::gamma)
      .def_property_readonly("steps", &isr::NoiseSchedule::steps)
      .def("beta_at", &isr::NoiseSchedule::beta_at, py::arg("t"))
      .def("gamma_at", &isr::NoiseSchedule::gamma_at, py::arg("t"))
      .def("gamma_prev", &isr::NoiseSchedule::gamma_prev, py::arg("t"));

  m.def("build_schedule", &isr::build_schedule, py::arg("steps"), py::arg("beta_start"),
        py::arg("beta_end"));

  m.def(
      "q_sample",
      [](const FloatArray& y0, int64_t t, const FloatArray& eps, const isr::NoiseSchedule& sched) {
        return to_array(isr::q_sample(to_tensor(y0), t, to_tensor(eps), sched));
      },
      py::arg("y0"), py::arg("t"), py::arg("eps"), py::arg("schedule"));
  m.def(
      "q_sample_gamma",
      [](const FloatArray& y0, double gamma, const FloatArray& eps) {
        return to_array(isr::q_sample_gamma(to_tensor(y0), gamma, to_tensor(eps)));
      },
      py::arg("y0"), py::arg("gamma"), py::arg("eps"));

  m.def("normalize_alphas", &isr::normalize_alphas, py::arg("a1"), py::arg("a2"));
  m.def("scaled_size", &isr::scaled_size, py::arg("s"), py::arg("n"));

  m.def(
      "to_unit_range",
      [](const FloatArray& x) { return to_array(isr::to_unit_range(to_tensor(x))); },
      py::arg("x"));
  m.def(
      "psnr",
      [](const FloatArray& a, const FloatArray& b, double peak) {
        return isr::psnr(to_tensor(a), to_tensor(b), peak);
      },
      py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);
  m.def(
      "ssim",
      [](const FloatArray& a, const FloatArray& b, double peak) {
        return isr::ssim(to_tensor(a), to_tensor(b), peak);
      },
      py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);
  m.def(
      "consistency",
      [](const FloatArray& x_lr, const FloatArray& sr) {
        return isr::consistency(to_tensor(x_lr), to_tensor(sr));
      },
      py::arg("x_lr"), py::arg("sr"));

  m.def(
      "resize_bicubic",
      [](const FloatArray& x, int64_t h, int64_t w) {
        return to_array(isr::resize_bicubic(to_tensor(x), h, w));
      },
      py::arg("x"), py::arg("h"), py::arg("w"));
  m.def(
      "degrade",
      [](const FloatArray& hr, double s, int64_t lr_size) {
        auto [x_lr, y0] = isr::degrade(as_image4(hr, "degrade").first, s, lr_size);
        return py::make_tuple(to_array(x_lr), to_array(y0));
      },
      py::arg("hr"), py::arg("s"), py::arg("lr_size"));

  m.def(
      "read_png", [](const std::string& path) { return to_array(isr::read_png(path)); },
      py::arg("path"));
  m.def(
      "write_png",
      [](const std::string& path, const FloatArray& image) {
        isr::write_png(path, to_tensor(image));
      },
      py::arg("path"), py::arg("image"));

  py::class_<PyModel>(m, "Model")
      .def_static("random", &PyModel::random, py::arg("config_json") = "{}", py::arg("seed") = 0)
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("save", &PyModel::save, py::arg("path"))
      .def("sample", &PyModel::sample, py::arg("x_lr"), py::arg("s"), py::arg("seed") = 0,
           py::arg("variance") = "")
      .def("config_json", &PyModel::config_json)
      .def("schedule", &PyModel::schedule, py::return_value_policy::reference_internal)
      .def_property_readonly("step", &PyModel::step)
      .def_property_readonly("num_parameters", &PyModel::num_parameters);
}
