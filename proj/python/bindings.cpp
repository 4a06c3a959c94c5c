#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gcsep/metrics.hpp"
#include "gcsep/profiler.hpp"
#include "gcsep/separator.hpp"
#include "gcsep/trainer.hpp"

namespace py = pybind11;
using namespace gcsep;

namespace {

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return std::vector<double>(arr.data(), arr.data() + arr.shape(0));
}

}  // namespace

PYBIND11_MODULE(_gcsep, m) {
  m.doc() = "Group-communication dual-path speech separation";

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("group_count", &ModelConfig::group_count)
      .def_readwrite("group_size", &ModelConfig::group_size)
      .def_readwrite("encoder_filters", &ModelConfig::encoder_filters)
      .def_readwrite("lstm_input", &ModelConfig::lstm_input)
      .def_readwrite("lstm_hidden", &ModelConfig::lstm_hidden)
      .def_readwrite("depth", &ModelConfig::depth)
      .def_readwrite("window_samples", &ModelConfig::window_samples)
      .def_readwrite("stride_samples", &ModelConfig::stride_samples)
      .def_readwrite("num_speakers", &ModelConfig::num_speakers)
      .def_readwrite("sample_rate", &ModelConfig::sample_rate)
      .def("validate", &ModelConfig::validate);

  py::class_<SeparatorModel>(m, "SeparatorModel")
      .def(py::init<const ModelConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed"))
      .def_property_readonly("num_params",
                             [](const SeparatorModel& s) { return s.registry().total_params(); })
      .def("separate", [](const SeparatorModel& s, const py::array_t<double>& wave) {
        const auto samples = to_vector(wave);
        Tensor out = s.separate(Tensor::from_data({1, samples.size()}, samples));
        const std::size_t spk = out.dim(0), len = out.dim(1);
        py::array_t<double> result({spk, len});
        std::copy(out.data().begin(), out.data().end(), result.mutable_data());
        return result;
      });

  m.def("count_model_params", &count_model_params);
  m.def("count_model_macs", &count_model_macs, py::arg("config"), py::arg("input_seconds"));
  m.def("table2_configs", &table2_configs);
  m.def("profile_model", [](const ModelConfig& cfg, double seconds) {
    const ComplexityReport rep = profile_model(cfg, seconds);
    py::dict d;
    d["params"] = rep.total_params;
    d["macs"] = rep.total_macs;
    py::dict breakdown;
    for (const auto& e : rep.breakdown) breakdown[e.name.c_str()] = py::make_tuple(e.params, e.macs);
    d["breakdown"] = breakdown;
    return d;
  });

  m.def("snr_db", [](const py::array_t<double>& est, const py::array_t<double>& ref) {
    return snr_db(to_vector(est), to_vector(ref));
  });
  m.def("si_sdr_db", [](const py::array_t<double>& est, const py::array_t<double>& ref) {
    return si_sdr_db(to_vector(est), to_vector(ref));
  });
  m.def("pit_si_sdr",
        [](const py::array_t<double>& e1, const py::array_t<double>& e2,
           const py::array_t<double>& r1, const py::array_t<double>& r2) {
          const PitSiSdr r = pit_si_sdr(to_vector(e1), to_vector(e2), to_vector(r1), to_vector(r2));
          py::dict d;
          d["mean_db"] = r.mean_db;
          d["per_source"] = py::make_tuple(r.per_source[0], r.per_source[1]);
          d["swapped"] = r.swapped;
          return d;
        });

  m.def("generate_toy_mixture",
        [](std::uint64_t seed, double duration_s, std::size_t sample_rate) {
          const ToyMixture mix = generate_toy_mixture(seed, duration_s, sample_rate);
          auto wrap = [](const std::vector<double>& v) {
            py::array_t<double> a(v.size());
            std::copy(v.begin(), v.end(), a.mutable_data());
            return a;
          };
          py::dict d;
          d["mixture"] = wrap(mix.mixture);
          d["source1"] = wrap(mix.source1);
          d["source2"] = wrap(mix.source2);
          return d;
        },
        py::arg("seed"), py::arg("duration_s"), py::arg("sample_rate"));
}
