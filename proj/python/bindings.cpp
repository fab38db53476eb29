#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "catapult/conditioning.hpp"
#include "catapult/dynamics.hpp"
#include "catapult/error.hpp"
#include "catapult/experiments.hpp"
#include "catapult/release.hpp"
#include "catapult/shaping.hpp"
#include "catapult/units.hpp"

namespace py = pybind11;
using namespace catapult;
namespace ex = catapult::experiments;

PYBIND11_MODULE(_catapult, m) {
  m.doc() = "catapult core bindings (SI units, angular frequencies)";
  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("version", &ex::version);
  m.def("parameters_json", [] { return params_to_json(table_s1()).dump(); });
  m.def("registry_json", [] {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& i : ex::registry()) {
      nlohmann::json params = nlohmann::json::object();
      for (const auto& p : i.params) params[p.key] = {{"default", p.default_value}, {"help", p.help}};
      out[i.name] = {{"figure", i.figure}, {"summary", i.summary}, {"params", params}};
    }
    return out.dump();
  });
  m.def("config_hash", [](const std::string& name, const std::string& settings) {
    return ex::config_hash(ex::resolve(ex::find(name), nlohmann::json::parse(settings)));
  }, py::arg("name"), py::arg("settings_json") = "{}");
  m.def("run_json", [](const std::string& name, const std::string& settings, const std::string& out) {
    py::gil_scoped_release release;
    return ex::run(name, nlohmann::json::parse(settings), out).manifest.dump();
  });

  m.def("analytic_two_mode", [](cplx a0, cplx g, double kappa_out, double delta, double t) {
    const auto r = analytic_two_mode(a0, g, kappa_out, delta, t);
    return py::make_tuple(r.a, r.b);
  }, py::arg("a0"), py::arg("g"), py::arg("kappa_out"), py::arg("delta"), py::arg("t"),
     "Cavity and output-mode amplitudes (a, b) at time t.");
  m.def("induced_rate", &induced_rate, py::arg("g"), py::arg("kappa_out"));
  m.def("fock_decay_populations", &fock_decay_populations, py::arg("m"), py::arg("n"), py::arg("kappa"), py::arg("t"));
  m.def("conversion_efficiency", [](double g) { return conversion_efficiency(table_s1(), g); }, py::arg("g"));

  m.def("bell_bound", [](double pa0, double pa_plus, double pb1_given0, double pb0_given1, double pbplus_given_plus,
                         double pbminus_given_minus) {
    BellStatistics s;
    s.pa0 = {pa0, 0.0};
    s.pa1 = {1.0 - pa0, 0.0};
    s.pa_plus = {pa_plus, 0.0};
    s.pa_minus = {1.0 - pa_plus, 0.0};
    s.pb1_given0 = {pb1_given0, 0.0};
    s.pb0_given1 = {pb0_given1, 0.0};
    s.pbplus_given_plus = {pbplus_given_plus, 0.0};
    s.pbminus_given_minus = {pbminus_given_minus, 0.0};
    return bell_bound(s).value;
  }, "Bell-fidelity lower bound from exact probabilities.");
  m.def("half_release_bell", [](std::size_t shots, std::uint64_t seed, double fe, double fg, double eta) {
    py::gil_scoped_release release;
    BellPipelineOptions opt;
    opt.shots = shots;
    opt.seed = seed;
    opt.fe = fe;
    opt.fg = fg;
    opt.detector.eta = eta;
    const auto joint = apply_release(make_state(state::Fock{1}, FockSpace(4, Mode::a)), units::pi / 2);
    const auto r = simulate_bell_experiment(joint, opt);
    return std::make_tuple(r.bound.value, r.bound.error);
  }, py::arg("shots") = 1000000, py::arg("seed") = 1, py::arg("fe") = 0.99, py::arg("fg") = 0.96, py::arg("eta") = 0.43,
     "(F_lb, error) for the sampled half-release of |1>.");

  m.def("invert_gaussian", [](double sigma, double center, double photons, double t_end) {
    const auto p = table_s1();
    const auto sol = invert_for_coupling(gaussian_target(sigma, center, photons, t_end, 1.0 / (25.0 * p.kappa_out)),
                                         p.kappa_out, 1.0);
    return py::make_tuple(sol.times, sol.g, forward_verify(sol, cplx(1.0), {}, p).l2_error);
  }, py::arg("sigma"), py::arg("center"), py::arg("photons"), py::arg("t_end"),
     "(times, g(t), round-trip L2 error) for a Gaussian emission target.");
}
