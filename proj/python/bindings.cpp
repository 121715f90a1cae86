#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acbl/errors.hpp"
#include "acbl/experiment.hpp"
#include "acbl/pde.hpp"
#include "acbl/placement.hpp"
#include "acbl/profile.hpp"
#include "acbl/toda.hpp"

namespace py = pybind11;
using namespace acbl;

PYBIND11_MODULE(_acbl, m) {
    m.doc() = "Boundary-layer clustering toolkit";
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "AcblError", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<HypothesisError>(m, "HypothesisError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
    py::register_exception<ResonanceError>(m, "ResonanceError", base.ptr());
    py::register_exception<BranchError>(m, "BranchError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    py::class_<ProfileConstants>(m, "ProfileConstants")
        .def_readonly("gamma0", &ProfileConstants::gamma0)
        .def_readonly("gamma1", &ProfileConstants::gamma1)
        .def_readonly("identity1", &ProfileConstants::identity1)
        .def_readonly("identity2", &ProfileConstants::identity2);
    m.def("profile_integrals", &profile_integrals, py::arg("window") = 25.0);
    m.def(
        "heteroclinic", [](double x) {
            auto v = heteroclinic_eval(x);
            return py::make_tuple(v.H, v.Hx);
        },
        py::arg("x"), "H(x) and H'(x)");
    m.def(
        "psi", [](double x) {
            auto v = psi_eval(x);
            return py::make_tuple(v.psi, v.dpsi, v.d2psi);
        },
        py::arg("x"), "ψ = ½xH_x with its first two derivatives");

    py::class_<PredictedPositions>(m, "PredictedPositions")
        .def_readonly("f1", &PredictedPositions::f1)
        .def_readonly("depth", &PredictedPositions::depth)
        .def_readonly("spacing", &PredictedPositions::spacing);
    m.def("predicted_positions", &predicted_positions, py::arg("N"), py::arg("eps"), py::arg("beta") = 1.0,
          py::arg("H") = 1.0);
    m.def(
        "solve_barf_node",
        [](int N, double beta, double beta1, double k) {
            BarfNode n = solve_barf_node(N, beta, beta1, k);
            return py::make_tuple(n.fbar, n.residual);
        },
        py::arg("N"), py::arg("beta") = 1.0, py::arg("beta1") = 0.0, py::arg("k") = 1.0,
        "offsets f̄ and the Newton residual at one boundary point");
    m.def("analytic_resonances", &analytic_resonances, py::arg("rho"), py::arg("gamma0"), py::arg("length"),
          py::arg("eps_lo"), py::arg("eps_hi"));

    py::class_<RadialSolution>(m, "RadialSolution")
        .def_readonly("N", &RadialSolution::N)
        .def_property_readonly("r", [](const RadialSolution& s) { return s.grid.r; })
        .def_readonly("u", &RadialSolution::u)
        .def_readonly("residual", &RadialSolution::residual)
        .def_readonly("predicted", &RadialSolution::predicted)
        .def_property_readonly("depths", [](const RadialSolution& s) { return s.layers.depth.at(0); })
        .def_property_readonly("iterations", [](const RadialSolution& s) { return s.trace.iterations; });
    m.def(
        "solve_radial",
        [](int N, double eps, std::optional<std::function<double(double)>> V, double h_fine) {
            RadialOptions o;
            if (V) o.V = *V;
            o.h_fine = h_fine;
            py::gil_scoped_release release;
            return solve_radial(N, eps, o);
        },
        py::arg("N"), py::arg("eps"), py::arg("V") = py::none(), py::arg("h_fine") = 0.05,
        "Newton solve of ε²Δu + V(1−u²)u = 0 on the unit disk; depths are in units of ε");
    m.def(
        "zero_crossings",
        [](const std::vector<double>& s, const std::vector<double>& u) {
            bool unresolved = false;
            auto z = zero_crossings(s, u, &unresolved);
            return py::make_tuple(z, unresolved);
        },
        py::arg("s"), py::arg("u"));

    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::string& out, int jobs) {
            RunConfig c = parse_config_text(config_json);
            RunContext ctx;
            if (!out.empty()) ctx.out_root = out;
            ctx.jobs = jobs;
            RunRecord r;
            {
                py::gil_scoped_release release;
                r = run_experiment(c, ctx);
            }
            return r.to_json().dump();
        },
        py::arg("config_json"), py::arg("out") = "", py::arg("jobs") = 1,
        "run one JSON configuration; returns the record as JSON text");
    m.def(
        "config_hash", [](const std::string& config_json) { return config_hash(parse_config_text(config_json)); },
        py::arg("config_json"));
}
