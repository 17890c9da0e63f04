#include "tvcycles/cone.hpp"
#include "tvcycles/errors.hpp"
#include "tvcycles/exterior.hpp"
#include "tvcycles/flow.hpp"
#include "tvcycles/form_io.hpp"
#include "tvcycles/hodge.hpp"
#include "tvcycles/tvprox.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace tvcycles;

namespace {

py::dict norm_dict(const NormValue& v)
{
    py::dict d;
    d["value"] = v.value;
    d["lower"] = v.lower;
    d["upper"] = v.upper;
    d["quality"] = v.quality == NormQuality::exact         ? "exact"
                   : v.quality == NormQuality::upper_bound ? "upper_bound"
                                                           : "lower_bound";
    return d;
}

DiscreteForm make_form(const std::vector<int>& dims, int degree, std::optional<Eigen::VectorXd> values,
                       std::optional<std::vector<double>> lengths)
{
    GridPtr grid = lengths ? make_grid(dims, *lengths) : make_grid(dims);
    if (!values) return {std::move(grid), degree};
    return {std::move(grid), degree, std::move(*values)};
}

py::dict flow_dict(const FlowResult& r)
{
    py::dict d;
    d["omega"] = r.omega_inf;
    d["termination"] = std::string(to_string(r.termination));
    d["trace_csv"] = r.trace.csv();
    d["steps"] = r.trace.records.size() - 1;
    d["failure"] = r.failure_message;
    return d;
}

FlowConfig flow_config(double h, long max_iters, double tol, double inner_tol, bool normalize)
{
    FlowConfig cfg;
    cfg.h = h;
    cfg.outer_max_iters = max_iters;
    cfg.outer_tol = tol;
    cfg.tv.inner_tol = inner_tol;
    cfg.splitting_tol = inner_tol;
    cfg.normalize = normalize;
    return cfg;
}

ConeSpec cone_for(const std::string& preset, int n)
{
    return make_cone(make_calibration(preset, n));
}

} // namespace

PYBIND11_MODULE(_tvcycles, m)
{
    m.doc() = "Total-variation flows of discrete differential forms on flat tori.";

    py::register_exception<SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);

    py::class_<KVector>(m, "KVector")
        .def(py::init<int, int, std::vector<double>>(), py::arg("n"), py::arg("k"), py::arg("coeffs"))
        .def_static("parse", &KVector::parse, py::arg("n"), py::arg("expr"))
        .def_property_readonly("dim", &KVector::dim)
        .def_property_readonly("degree", &KVector::degree)
        .def_property_readonly("coeffs",
                               [](const KVector& v) { return std::vector<double>(v.coeffs().begin(), v.coeffs().end()); })
        .def("__repr__", [](const KVector& v) { return "KVector(" + v.to_string() + ")"; });

    m.def("euclid_norm", &euclid_norm, py::arg("v"));
    m.def("mass_norm", [](const KVector& v) { return norm_dict(mass_norm(v)); }, py::arg("v"));
    m.def("comass_norm", [](const KVector& v) { return norm_dict(comass_norm(v)); }, py::arg("v"));
    m.def(
        "is_decomposable",
        [](const KVector& v, double tol) {
            switch (is_decomposable(v, tol)) {
            case Decomposability::decomposable: return "decomposable";
            case Decomposability::not_decomposable: return "not_decomposable";
            case Decomposability::indeterminate: return "indeterminate";
            }
            return "indeterminate";
        },
        py::arg("v"), py::arg("tol") = 1e-9);
    m.def(
        "mass_decomposition",
        [](const KVector& v) {
            const MassDecomposition d = mass_decomposition(v);
            return py::make_tuple(d.terms, d.total);
        },
        py::arg("v"));

    py::class_<DiscreteForm>(m, "Form")
        .def(py::init(&make_form), py::arg("dims"), py::arg("degree"), py::arg("values") = py::none(),
             py::arg("lengths") = py::none())
        .def_property_readonly("dims",
                               [](const DiscreteForm& f) {
                                   return std::vector<int>(f.grid().dims().begin(), f.grid().dims().end());
                               })
        .def_property_readonly("lengths",
                               [](const DiscreteForm& f) {
                                   return std::vector<double>(f.grid().lengths().begin(), f.grid().lengths().end());
                               })
        .def_property_readonly("degree", &DiscreteForm::degree)
        .def_property_readonly("components", &DiscreteForm::components)
        .def_property(
            "values", [](const DiscreteForm& f) { return Eigen::VectorXd(f.values()); },
            [](DiscreteForm& f, const Eigen::VectorXd& v) {
                f = DiscreteForm(f.grid_ptr(), f.degree(), v);
            })
        .def("__add__", [](const DiscreteForm& a, const DiscreteForm& b) { return a + b; })
        .def("__sub__", [](const DiscreteForm& a, const DiscreteForm& b) { return a - b; })
        .def("__mul__", [](const DiscreteForm& a, double s) { return a * s; })
        .def("__rmul__", [](const DiscreteForm& a, double s) { return a * s; });

    m.def("exterior_derivative", &exterior_derivative, py::arg("form"));
    m.def("codifferential", &codifferential, py::arg("form"));
    m.def("hodge_star", &hodge_star, py::arg("form"));
    m.def("l2_inner", &l2_inner, py::arg("a"), py::arg("b"));
    m.def("l2_norm", &l2_norm, py::arg("form"));

    m.def(
        "hodge_decompose",
        [](const DiscreteForm& omega, double cg_tol) {
            const HodgeSplit s = hodge_decompose(omega, cg_tol);
            py::dict d;
            d["exact"] = s.exact;
            d["coexact"] = s.coexact;
            d["harmonic"] = s.harmonic;
            d["reconstruction_residual"] = s.reconstruction_residual;
            d["orthogonality_residual"] = s.orthogonality_residual;
            return d;
        },
        py::arg("form"), py::arg("cg_tol") = 1e-10);
    m.def("closed_projection", &closed_projection, py::arg("form"), py::arg("cg_tol") = 1e-10);

    m.def("tv_energy", &tv_energy, py::arg("form"));
    m.def(
        "prox_tv",
        [](const DiscreteForm& omega, double h, double inner_tol, long max_iters) {
            TVConfig cfg;
            cfg.inner_tol = inner_tol;
            cfg.inner_max_iters = max_iters;
            return prox_tv(omega, h, cfg);
        },
        py::arg("form"), py::arg("h"), py::arg("inner_tol") = 1e-8, py::arg("max_iters") = 20000);

    m.def(
        "denoise",
        [](const DiscreteForm& omega, double h, long max_iters, double tol, double inner_tol,
           const std::vector<DiscreteForm>& probes) {
            return flow_dict(prox_flow_unconstrained(omega, flow_config(h, max_iters, tol, inner_tol, false), probes));
        },
        py::arg("form"), py::arg("h") = 1.0, py::arg("max_iters") = 500, py::arg("tol") = 1e-9,
        py::arg("inner_tol") = 1e-8, py::arg("probes") = std::vector<DiscreteForm>{});
    m.def(
        "calibrate",
        [](const DiscreteForm& omega, const std::string& calibration, bool normalize, double h, long max_iters,
           double tol, double inner_tol, const std::vector<DiscreteForm>& witnesses) {
            const ConeSpec spec = cone_for(calibration, omega.grid().dim());
            return flow_dict(
                prox_flow_constrained(omega, spec, flow_config(h, max_iters, tol, inner_tol, normalize), witnesses));
        },
        py::arg("form"), py::arg("calibration"), py::arg("normalize") = false, py::arg("h") = 1.0,
        py::arg("max_iters") = 500, py::arg("tol") = 1e-9, py::arg("inner_tol") = 1e-8,
        py::arg("witnesses") = std::vector<DiscreteForm>{});

    m.def(
        "project_cone",
        [](const DiscreteForm& omega, const std::string& calibration) {
            return project_cone_form(cone_for(calibration, omega.grid().dim()), omega);
        },
        py::arg("form"), py::arg("calibration"));
    m.def(
        "cone_residual",
        [](const DiscreteForm& omega, const std::string& calibration) {
            return cone_residual(cone_for(calibration, omega.grid().dim()), omega).max_site_distance;
        },
        py::arg("form"), py::arg("calibration"));
    m.def(
        "transversal_pairing",
        [](const DiscreteForm& omega, const std::string& calibration) {
            return transversal_pairing(make_calibration(calibration, omega.grid().dim()), omega);
        },
        py::arg("form"), py::arg("calibration"));
    m.def(
        "sample_calibrated",
        [](const std::string& calibration, const std::vector<int>& dims, std::uint64_t seed,
           std::optional<std::vector<double>> lengths) {
            GridPtr grid = lengths ? make_grid(dims, *lengths) : make_grid(dims);
            return sample_calibrated(cone_for(calibration, grid->dim()), grid, seed);
        },
        py::arg("calibration"), py::arg("dims"), py::arg("seed") = 1, py::arg("lengths") = py::none());

    m.def("read_form", [](const std::string& path) { return read_form(path); }, py::arg("path"));
    m.def("write_form", [](const std::string& path, const DiscreteForm& f) { write_form(path, f); }, py::arg("path"),
          py::arg("form"));
    m.def("form_to_string", &form_to_string, py::arg("form"));
    m.def("form_from_string", &form_from_string, py::arg("text"));
}
