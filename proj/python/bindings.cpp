#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sigdelta/channels.hpp"
#include "sigdelta/filter_design.hpp"
#include "sigdelta/io.hpp"
#include "sigdelta/simulate.hpp"
#include "sigdelta/spectra.hpp"

namespace py = pybind11;
using namespace sigdelta;

namespace {

std::string simulate_json(const std::string& config, const std::string& base_dir) {
  const SimConfig cfg = io::sim_config_from_json(io::Json::parse(config), base_dir);
  io::Json out;
  out["config"] = io::sim_config_to_json(cfg);
  {
    py::gil_scoped_release release;
    out["report"] = io::sim_report_to_json(monte_carlo(cfg));
  }
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_sigdelta, m) {
  m.doc() = "Sigma-delta / DPCM rate-distortion core";

  py::class_<BandSpec>(m, "BandSpec")
      .def(py::init<double, double>(), py::arg("L"), py::arg("sigma2_x"))
      .def_property_readonly("L", &BandSpec::oversampling)
      .def_property_readonly("sigma2_x", &BandSpec::sigma2_x)
      .def_property_readonly("band_edge", &BandSpec::band_edge)
      .def("__repr__", [](const BandSpec& s) {
        return "BandSpec(L=" + io::format_double(s.oversampling()) +
               ", sigma2_x=" + io::format_double(s.sigma2_x()) + ")";
      });

  py::class_<FirFilter>(m, "FirFilter")
      .def(py::init<>())
      .def(py::init<std::vector<double>>(), py::arg("taps"))
      .def_property_readonly("taps", [](const FirFilter& f) {
        return std::vector<double>(f.taps().begin(), f.taps().end());
      })
      .def_property_readonly("order", &FirFilter::order)
      .def("response", &FirFilter::response, py::arg("omega"))
      .def("noise_transfer", &FirFilter::noise_transfer)
      .def(py::self == py::self);

  m.def("sinc", &sinc);
  m.def("flat_band_autocorr",
        py::overload_cast<const BandSpec&, std::size_t>(&flat_band_autocorr),
        py::arg("spec"), py::arg("max_lag"));
  m.def("band_energy", &band_energy, py::arg("filter"), py::arg("L"));
  m.def("total_energy", &total_energy, py::arg("filter"));

  py::enum_<Architecture>(m, "Architecture")
      .value("SIGMA_DELTA", Architecture::SigmaDelta)
      .value("DPCM", Architecture::Dpcm);
  py::class_<RatePoint>(m, "RatePoint")
      .def_readonly("distortion", &RatePoint::distortion)
      .def_readonly("rate_bits", &RatePoint::mutual_info_bits)
      .def_readonly("architecture", &RatePoint::architecture);
  py::class_<NoiseMapping>(m, "NoiseMapping")
      .def_readonly("sigma2_sd", &NoiseMapping::sigma2_sd)
      .def_readonly("sigma2_dpcm", &NoiseMapping::sigma2_dpcm)
      .def_readonly("band_energy", &NoiseMapping::band_energy);
  py::class_<PostScaling>(m, "PostScaling")
      .def_readonly("alpha", &PostScaling::alpha)
      .def_readonly("d_tilde", &PostScaling::d_tilde)
      .def_readonly("rate_bits", &PostScaling::rate_bits);

  m.def("sigma_delta_rd",
        [](const BandSpec& s, const FirFilter& f, double v) { return sigma_delta_rd(s, f, v); },
        py::arg("spec"), py::arg("filter"), py::arg("sigma2_sd"));
  m.def("dpcm_rd", &dpcm_rd, py::arg("spec"), py::arg("filter"), py::arg("sigma2_dpcm"));
  m.def("dual_noise_variance", &dual_noise_variance, py::arg("spec"), py::arg("filter"), py::arg("d"));
  m.def("rate_lower_bound", &rate_lower_bound, py::arg("spec"), py::arg("d"));
  m.def("post_scaling", &post_scaling, py::arg("spec"), py::arg("d"));

  py::class_<DesignResult>(m, "DesignResult")
      .def_readonly("filter", &DesignResult::filter)
      .def_readonly("pred_error_var", &DesignResult::pred_error_var)
      .def_readonly("rate_bits", &DesignResult::rate_bits)
      .def_property_readonly("method", [](const DesignResult& r) { return to_string(r.diagnostics.method); });
  m.def("design_fir_predictor", &design_fir_predictor, py::arg("spec"), py::arg("d"), py::arg("order"));
  m.def("prediction_objective",
        py::overload_cast<const BandSpec&, double, const FirFilter&>(&prediction_objective),
        py::arg("spec"), py::arg("d"), py::arg("filter"));
  m.def("entropy_power_limit", [](const BandSpec& s, double d) {
    const auto e = entropy_power_limit(s, d);
    return py::make_tuple(e.pred_limit, e.entropy_power);
  }, py::arg("spec"), py::arg("d"));

  py::class_<UnconstrainedDesign>(m, "UnconstrainedDesign")
      .def_readonly("result", &UnconstrainedDesign::result)
      .def_readonly("log_integral", &UnconstrainedDesign::log_integral)
      .def_readonly("monic_error", &UnconstrainedDesign::monic_error)
      .def_readonly("max_level_deviation", &UnconstrainedDesign::max_level_deviation)
      .def_readonly("rate_lower_bound", &UnconstrainedDesign::rate_lower_bound)
      .def_readonly("rate_gap", &UnconstrainedDesign::rate_gap)
      .def_readonly("within_tolerance", &UnconstrainedDesign::within_tolerance);
  m.def("design_unconstrained",
        [](const BandSpec& s, double d, std::size_t taps, double transition, std::size_t grid) {
          UnconstrainedOptions o;
          o.taps = taps;
          o.transition = transition;
          return design_unconstrained(FrequencyGrid(grid), s, d, o);
        },
        py::arg("spec"), py::arg("d"), py::arg("taps") = 4096, py::arg("transition") = -1.0,
        py::arg("grid") = FrequencyGrid::kDefaultSize);

  py::class_<QuantizerSpec>(m, "QuantizerSpec")
      .def(py::init<int, double>(), py::arg("rate_bits"), py::arg("sigma2"))
      .def_property_readonly("step", &QuantizerSpec::step)
      .def_property_readonly("support", &QuantizerSpec::support)
      .def("levels", &QuantizerSpec::levels);
  m.def("quantize", [](const QuantizerSpec& q, double x) {
    const auto r = quantize(q, x);
    return py::make_tuple(r.level, r.overloaded);
  }, py::arg("q"), py::arg("x"));

  m.def("synthesize_band_limited",
        [](const BandSpec& s, std::size_t n, std::uint64_t seed) {
          return synthesize_band_limited(s, std::nullopt, n, seed);
        },
        py::arg("spec"), py::arg("n"), py::arg("seed"));
  m.def("overload_bound", &overload_bound, py::arg("excess_rate_bits"), py::arg("n"));
  m.def("overload_rate_penalty", &overload_rate_penalty, py::arg("p_ol"), py::arg("n"));
  m.def("_simulate_json", &simulate_json, py::arg("config"), py::arg("base_dir") = ".");

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
}
