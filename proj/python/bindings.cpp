// Python bindings for the siws core. JSON-shaped results come back as
// plain Python dicts; matrices and vectors as NumPy arrays.

#include "siws/scenario.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace siws;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

SimulationOptions sim_options(long max_steps, double tol, long stride) {
    SimulationOptions o;
    if (max_steps > 0) o.max_steps = max_steps;
    if (tol > 0.0) o.tol = tol;
    o.stride = stride;
    return o;
}

// Trajectory as {"steps", "converged", "step": (R,), "states": (R, l, n+m)}.
py::dict trajectory_dict(const Trajectory& t) {
    const std::size_t R = t.snapshots.size();
    const std::size_t l = t.snapshots.front().states.size();
    const Index N = t.snapshots.front().states[0].x.size() + t.snapshots.front().states[0].w.size();
    py::array_t<long> steps(static_cast<py::ssize_t>(R));
    py::array_t<double> states({static_cast<py::ssize_t>(R), static_cast<py::ssize_t>(l), static_cast<py::ssize_t>(N)});
    auto s = steps.mutable_unchecked<1>();
    auto z = states.mutable_unchecked<3>();
    for (std::size_t r = 0; r < R; ++r) {
        s(r) = t.snapshots[r].step;
        for (std::size_t k = 0; k < l; ++k) {
            const Vector v = t.snapshots[r].states[k].stacked();
            for (Index i = 0; i < N; ++i) z(r, k, i) = v(i);
        }
    }
    py::dict d;
    d["steps"] = t.steps;
    d["converged"] = t.converged;
    d["step"] = steps;
    d["states"] = states;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Discrete-time SIWS epidemics on layered networks";

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<SpreadingParams>(m, "Params")
        .def(py::init([](Matrix B, Matrix B_w, Matrix C_w, Vector D, Vector D_w) {
                 SpreadingParams p{std::move(B), std::move(B_w), std::move(C_w), std::move(D), std::move(D_w)};
                 p.check_shapes();
                 return p;
             }),
             py::arg("B"), py::arg("B_w"), py::arg("C_w"), py::arg("D"), py::arg("D_w"))
        .def_readwrite("B", &SpreadingParams::B)
        .def_readwrite("B_w", &SpreadingParams::B_w)
        .def_readwrite("C_w", &SpreadingParams::C_w)
        .def_readwrite("D", &SpreadingParams::D)
        .def_readwrite("D_w", &SpreadingParams::D_w)
        .def_property_readonly("n", &SpreadingParams::n)
        .def_property_readonly("m", &SpreadingParams::m)
        .def_static(
            "homogeneous",
            [](Index n, Index mm, double beta, double delta, double c, double delta_w) {
                return homogeneous_params(n, mm, {beta, delta, c, delta_w});
            },
            py::arg("n"), py::arg("m"), py::arg("beta"), py::arg("delta"), py::arg("c"), py::arg("delta_w"));

    m.def(
        "assemble_full",
        [](const SpreadingParams& p, double h) {
            const FullSystem f = assemble_full(p, h);
            return py::make_tuple(f.B_f, f.D_f);
        },
        py::arg("params"), py::arg("h"), "Returns (B_f, D_f).");

    m.def("check_irreducible", &check_irreducible, py::arg("A"));

    m.def(
        "validate",
        [](const SpreadingParams& p, const Vector& x0, const Vector& w0, double h) {
            return to_python(report_json(validate(p, State{x0, w0}, h)));
        },
        py::arg("params"), py::arg("x0"), py::arg("w0"), py::arg("h"));

    m.def(
        "spectral_radius",
        [](const Matrix& M) {
            const PerronData p = spectral_radius(M);
            py::dict d;
            d["rho"] = p.rho;
            d["right"] = p.right;
            d["left"] = p.left;
            d["iterations"] = p.iterations;
            return d;
        },
        py::arg("M"));

    m.def(
        "reproduction_number", [](const SpreadingParams& p) { return reproduction_number(assemble_full(p, 0.0)); },
        py::arg("params"));
    m.def(
        "s1_shifted", [](const SpreadingParams& p, double h) { return s1_shifted(assemble_full(p, h)); },
        py::arg("params"), py::arg("h"));

    m.def(
        "step",
        [](const SpreadingParams& p, const Vector& x, const Vector& w, double h) {
            const State z = step_single(State{x, w}, p, h);
            return py::make_tuple(z.x, z.w);
        },
        py::arg("params"), py::arg("x"), py::arg("w"), py::arg("h"), "One step of the single-virus map.");

    m.def(
        "simulate",
        [](const SpreadingParams& p, const Vector& x0, const Vector& w0, double h, long max_steps, double tol,
           long stride) {
            return trajectory_dict(
                simulate(State{x0, w0}, ParameterSchedule::constant(p), h, sim_options(max_steps, tol, stride)));
        },
        py::arg("params"), py::arg("x0"), py::arg("w0"), py::arg("h"), py::arg("max_steps") = 0, py::arg("tol") = 0.0,
        py::arg("stride") = 0);

    m.def(
        "endemic_equilibrium",
        [](const SpreadingParams& p, double h) -> py::object {
            const EquilibriumResult r = endemic_fixed_point(assemble_full(p, h));
            if (!r.z_star) return py::none();
            return py::make_tuple(r.z_star->x, r.z_star->w);
        },
        py::arg("params"), py::arg("h"), "Returns (x*, w*), or None when only the healthy state exists.");

    m.def("homogeneous_equilibrium", &homogeneous_equilibrium, py::arg("n"), py::arg("m"), py::arg("beta"),
          py::arg("delta"), py::arg("c_hat"));

    m.def(
        "classify", [](const SpreadingParams& p, double h) { return to_python(report_json(classify_single(assemble_full(p, h)))); },
        py::arg("params"), py::arg("h"));

    py::class_<ScenarioFile>(m, "Scenario")
        .def_static("parse", &parse_scenario, py::arg("text"))
        .def_static("load", &load_scenario, py::arg("path"))
        .def_static(
            "generate",
            [](Index n, Index mm, std::size_t l, double h, std::uint64_t seed, const std::string& target) {
                return generate_random(n, mm, l, h, seed, parse_target(target));
            },
            py::arg("n"), py::arg("m"), py::arg("l") = 1, py::arg("h") = 0.01, py::arg("seed") = 0,
            py::arg("target") = "supercritical")
        .def("to_json", &serialize)
        .def("save", [](const ScenarioFile& s, const std::string& path) { save_scenario(s, path); }, py::arg("path"))
        .def_readonly("n", &ScenarioFile::n)
        .def_readonly("m", &ScenarioFile::m)
        .def_readonly("h", &ScenarioFile::h)
        .def_readonly("seed", &ScenarioFile::seed)
        .def_property_readonly("l", &ScenarioFile::l)
        .def(
            "params", [](const ScenarioFile& s, std::size_t k) { return s.viruses.at(k).pieces.at(0).params; },
            py::arg("virus") = 0)
        .def(
            "initial",
            [](const ScenarioFile& s, std::size_t k) {
                const State& z = s.viruses.at(k).initial;
                return py::make_tuple(z.x, z.w);
            },
            py::arg("virus") = 0)
        .def("validate", [](const ScenarioFile& s) { return to_python(report_json(s.validate())); })
        .def(
            "simulate",
            [](const ScenarioFile& s, long max_steps, double tol, long stride) {
                return trajectory_dict(simulate_multi(s.scenario(), s.schedules(), sim_options(max_steps, tol, stride)));
            },
            py::arg("max_steps") = 0, py::arg("tol") = 0.0, py::arg("stride") = 0)
        .def("two_virus_analysis", [](const ScenarioFile& s) { return to_python(report_json(two_virus_analysis(s.scenario()))); })
        .def("__eq__", [](const ScenarioFile& a, const ScenarioFile& b) { return a == b; });
}
