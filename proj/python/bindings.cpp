#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "loopshape/analysis.hpp"
#include "loopshape/cli.hpp"
#include "loopshape/error.hpp"
#include "loopshape/filters.hpp"
#include "loopshape/fracapprox.hpp"
#include "loopshape/session.hpp"
#include "loopshape/timesim.hpp"

namespace py = pybind11;
using namespace loopshape;
using session::Json;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::handle& obj) {
  return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

analysis::FreqGrid grid_of(const std::tuple<double, double, int>& g) {
  return {std::get<0>(g), std::get<1>(g), std::get<2>(g)};
}

RationalTF make_tf(std::vector<double> num, std::vector<double> den, std::optional<double> T) {
  if (T) return RationalTF::discrete(Polynomial(std::move(num)), Polynomial(std::move(den)), *T);
  return RationalTF(Polynomial(std::move(num)), Polynomial(std::move(den)));
}

}  // namespace

PYBIND11_MODULE(_loopshape, m) {
  m.doc() = "Fractional-order loop shaping core";

  static PyObject* error = PyErr_NewException("loopshape.LoopshapeError", PyExc_ValueError, nullptr);
  m.attr("LoopshapeError") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error)(e.what());
      inst.attr("code") = std::string(e.name());
      inst.attr("module") = std::string(error_module(e.code()));
      PyErr_SetObject(error, inst.ptr());
    }
  });

  py::class_<RationalTF>(m, "TransferFunction")
      .def(py::init(&make_tf), py::arg("num"), py::arg("den"), py::arg("sample_period_s") = py::none(),
           "Coefficients ascend in s, or in z for a discrete system.")
      .def_property_readonly("num", [](const RationalTF& t) { return t.num().vec(); })
      .def_property_readonly("den", [](const RationalTF& t) { return t.den().vec(); })
      .def_property_readonly("is_discrete", &RationalTF::is_discrete)
      .def_property_readonly("sample_period_s", &RationalTF::sample_period)
      .def_property_readonly("order", &RationalTF::order)
      .def("poles", [](const RationalTF& t) { return t.den().roots(); })
      .def("zeros", [](const RationalTF& t) { return t.num().roots(); })
      .def("response", &RationalTF::response, py::arg("f_hz"))
      .def("responses",
           [](const RationalTF& t, const std::vector<double>& f) { return eval_response(t, f).values; },
           py::arg("f_hz"))
      .def("__mul__", [](const RationalTF& a, const RationalTF& b) { return series(a, b); })
      .def("__repr__", [](const RationalTF& t) { return "TransferFunction(" + session::to_json(t).dump() + ")"; });

  m.def("feedback", [](const RationalTF& g) { return feedback(g); }, py::arg("loop"));
  m.def("gamma", &frac::gamma_fn, py::arg("x"));

  m.def(
      "crone",
      [](double nu, double lo, double hi, int n) { return frac::crone(nu, {lo, hi, n}); },
      py::arg("nu"), py::arg("omega_low_rad_s") = 1e-2, py::arg("omega_high_rad_s") = 1e2, py::arg("n_pairs") = 5);
  m.def("carlson", &frac::carlson, py::arg("nu"), py::arg("iterations") = 2);
  m.def(
      "matsuda",
      [](double nu, double lo, double hi, int n) { return frac::matsuda(nu, {lo, hi, n}); },
      py::arg("nu"), py::arg("omega_low_rad_s") = 1e-2, py::arg("omega_high_rad_s") = 1e2, py::arg("n_pairs") = 5);
  m.def(
      "cfe",
      [](double nu, const std::string& method, double T, int order) {
        return frac::cfe_discretize(nu, {T, order}, frac::to_cfe(frac::parse_method(method)));
      },
      py::arg("nu"), py::arg("method"), py::arg("sample_period_s"), py::arg("order") = 3);

  m.def(
      "realize_filter",
      [](const py::dict& spec) { return filters::realize_filter(session::filter_from_json(from_py(spec), "")); },
      py::arg("spec"));
  m.def(
      "assemble_controller",
      [](const py::dict& def) { return filters::assemble_controller(session::controller_from_json(from_py(def), "")).tf; },
      py::arg("controller"));

  m.def(
      "margins",
      [](const RationalTF& plant, const RationalTF& controller, std::tuple<double, double, int> grid) {
        return to_py(session::to_json(analysis::loop_margins(plant, controller, grid_of(grid), {})));
      },
      py::arg("plant"), py::arg("controller"), py::arg("grid") = std::make_tuple(1e-2, 1e4, 100));

  m.def(
      "simulate",
      [](const RationalTF& plant, const RationalTF& controller, const py::dict& cfg) {
        const auto r = sim::simulate(plant, controller, std::nullopt, session::sim_config_from_json(from_py(cfg), ""));
        py::dict out;
        out["time_s"] = r.time_s;
        out["reference"] = r.reference;
        out["output"] = r.output;
        out["control_effort"] = r.control_effort;
        out["diverged"] = r.diverged;
        return out;
      },
      py::arg("plant"), py::arg("controller"), py::arg("config"));

  m.def("discretize", &sim::discretize, py::arg("tf"), py::arg("sample_period_s"));

  m.def(
      "load_session", [](const std::string& text) { return to_py(session::to_json(session::load_session(text))); },
      py::arg("text"));
  m.def(
      "save_session", [](const py::dict& doc) { return session::save_session(session::session_from_json(from_py(doc))); },
      py::arg("session"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"loopshape"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int rc = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return std::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"));
}
