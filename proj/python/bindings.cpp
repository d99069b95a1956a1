#include "ratunnel/errors.hpp"
#include "ratunnel/quantum.hpp"
#include "ratunnel/scan.hpp"
#include "ratunnel/semiclassics.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace ratunnel;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Resonance-assisted tunnelling splittings on a periodic quartic lattice";
  m.attr("__version__") = "0.1.0";

  static const py::handle error = py::exception<Error>(m, "RatunnelError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(e.kind()) + ": " + e.what()).c_str());
    }
  });

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double a1, double a2, double b_mod, double phi, int ell) {
             ModelParams p{a1, a2, b_mod, phi, ell};
             p.validate();
             return p;
           }),
           py::arg("a1") = 1.0, py::arg("a2") = -0.55, py::arg("b_mod") = 0.05, py::arg("phi") = 0.0,
           py::arg("ell") = 4)
      .def_readwrite("a1", &ModelParams::a1)
      .def_readwrite("a2", &ModelParams::a2)
      .def_readwrite("b_mod", &ModelParams::b_mod)
      .def_readwrite("phi", &ModelParams::phi)
      .def_readwrite("ell", &ModelParams::ell)
      .def("with_b", &ModelParams::with_b)
      .def("with_phi", &ModelParams::with_phi)
      .def("unperturbed", &ModelParams::unperturbed)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(a1=" + std::to_string(p.a1) + ", a2=" + std::to_string(p.a2) +
               ", b_mod=" + std::to_string(p.b_mod) + ", phi=" + std::to_string(p.phi) +
               ", ell=" + std::to_string(p.ell) + ")";
      });

  py::enum_<Branch>(m, "Branch").value("Inner", Branch::Inner).value("Outer", Branch::Outer);

  m.def("eval_H", py::overload_cast<double, double, const ModelParams&>(&eval_H), py::arg("p"), py::arg("q"),
        py::arg("params"));
  m.def("crown_energy", &crown_energy);
  m.def("separatrix_energy", [](const ModelParams& p) { return energy_landscape(p).separatrix; });
  m.def("chain_energy", [](const ModelParams& p) { return energy_landscape(p).chain; });

  py::class_<RealTorus>(m, "RealTorus")
      .def_readonly("energy", &RealTorus::energy)
      .def_readonly("branch", &RealTorus::branch)
      .def_readonly("action", &RealTorus::action)
      .def_readonly("period", &RealTorus::period)
      .def_readonly("frequency", &RealTorus::frequency);
  m.def("find_torus",
        [](double E, Branch b, const ModelParams& p) { return find_torus(E, b, p); },
        py::arg("E"), py::arg("branch"), py::arg("params"));
  m.def("ebk_energy", [](int n, double hbar, Branch b, const ModelParams& p) { return ebk_energy(n, hbar, b, p); },
        py::arg("n"), py::arg("hbar"), py::arg("branch"), py::arg("params"));

  m.def("sigma_chain", [](double E, const ModelParams& p) { return shoot_chain_crossing(E, p).sigma; });
  m.def("sigma_separatrix", [](double E, const ModelParams& p) { return shoot_separatrix_crossing(E, p).sigma; });
  m.def("sigma_direct", [](double E, const ModelParams& p) { return shoot_direct(E, p).sigma; });
  m.def("sigma_pendulum", [](double E, const ModelParams& p) { return sigma_pendulum(E, pendulum_params(p)); });

  m.def("spectrum",
        [](int N, const ModelParams& p) {
          const TorusGrid g(N);
          const auto s = diagonalize(build_hamiltonian(p, g), g);
          return py::make_tuple(s.energies, s.parity);
        },
        py::arg("N"), py::arg("params"), "Ascending energies and reflection parities.");
  m.def("exact_splitting",
        [](int n, int N, const ModelParams& p) { return exact_splitting(n, p, TorusGrid(N)).splitting; },
        py::arg("n"), py::arg("N"), py::arg("params"));

  m.def("unperturbed_splitting",
        [](int n, double hbar, const ModelParams& p) { return unperturbed_splitting(n, hbar, p.unperturbed()); });
  m.def("rat_splitting", [](int n, double hbar, const ModelParams& p) { return rat_splitting(n, hbar, p).splitting; });
  m.def("island_area", [](const ModelParams& p) { return island_area(p); });
  m.def("n_peak", [](int n, const ModelParams& p) { return hbar_peak(n, p).N; });
  m.def("n_res", [](int n, const ModelParams& p) { return hbar_res(n, p).N_res; });

  py::class_<SplittingRecord>(m, "SplittingRecord")
      .def_readonly("N", &SplittingRecord::N)
      .def_readonly("n", &SplittingRecord::n)
      .def_readonly("phi", &SplittingRecord::phi)
      .def_readonly("b_mod", &SplittingRecord::b_mod)
      .def_readonly("E_n", &SplittingRecord::E_n)
      .def_readonly("dE_exact", &SplittingRecord::dE_exact)
      .def_readonly("dE_cpath", &SplittingRecord::dE_complex_path)
      .def_readonly("dE_direct", &SplittingRecord::dE_direct)
      .def_readonly("dE_rat", &SplittingRecord::dE_rat)
      .def_readonly("dE_unpert", &SplittingRecord::dE_unpert)
      .def_readonly("sigma_c", &SplittingRecord::sigma_c)
      .def_readonly("sigma_tilde", &SplittingRecord::sigma_tilde)
      .def_readonly("Sigma", &SplittingRecord::Sigma)
      .def_readonly("flags", &SplittingRecord::flags);
  m.def("evaluate_point",
        [](int N, int n, const ModelParams& p, const std::string& methods) {
          return evaluate_point(N, n, p, parse_methods(methods));
        },
        py::arg("N"), py::arg("n"), py::arg("params"), py::arg("methods") = "all",
        py::call_guard<py::gil_scoped_release>());
}
