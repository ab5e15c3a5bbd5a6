// Python bindings for the main library operations: group arithmetic, the
// calibrated gauge, sphere quadrature, capacities, map reports, and the
// value-distribution constructions.

#include "hcarnot/algebra.hpp"
#include "hcarnot/capacity.hpp"
#include "hcarnot/curves.hpp"
#include "hcarnot/kaplan.hpp"
#include "hcarnot/maps.hpp"
#include "hcarnot/quadrature.hpp"
#include "hcarnot/value_distribution.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace hcarnot;

PYBIND11_MODULE(_hcarnot, m) {
    m.doc() = "Value-distribution toolkit for H-type Carnot groups";

    py::class_<HTypeAlgebra>(m, "HTypeAlgebra")
        .def_static("heisenberg", &HTypeAlgebra::heisenberg, py::arg("n"))
        .def_static("by_name", &HTypeAlgebra::by_name, py::arg("name"))
        .def_property_readonly("n1", &HTypeAlgebra::n1)
        .def_property_readonly("n2", &HTypeAlgebra::n2)
        .def_property_readonly("Q", &HTypeAlgebra::homogeneous_dim)
        .def("origin", &HTypeAlgebra::origin);

    py::class_<GroupPoint>(m, "GroupPoint")
        .def(py::init([](const Vec& v, const Vec& z) { return GroupPoint{v, z}; }),
             py::arg("v"), py::arg("z"))
        .def_readwrite("v", &GroupPoint::v)
        .def_readwrite("z", &GroupPoint::z)
        .def("__repr__", [](const GroupPoint& p) {
            std::string s = "GroupPoint(v=[";
            for (int i = 0; i < p.v.size(); ++i)
                s += (i ? "," : "") + std::to_string(p.v(i));
            s += "], z=[";
            for (int i = 0; i < p.z.size(); ++i)
                s += (i ? "," : "") + std::to_string(p.z(i));
            return s + "])";
        });

    m.def("multiply", &multiply, py::arg("alg"), py::arg("p"), py::arg("q"));
    m.def("inverse", &inverse, py::arg("alg"), py::arg("p"));
    m.def("dilate", &dilate, py::arg("alg"), py::arg("lam"), py::arg("p"));
    m.def("left_translate", &left_translate, py::arg("alg"), py::arg("w"), py::arg("p"));

    py::class_<KaplanNorm>(m, "KaplanNorm")
        .def(py::init<const HTypeAlgebra&, double>(), py::arg("alg"), py::arg("c") = 1.0)
        .def_property_readonly("c", &KaplanNorm::c)
        .def_property_readonly("m0", &KaplanNorm::m0)
        .def("norm", &KaplanNorm::norm)
        .def("upsilon", &KaplanNorm::upsilon)
        .def("distance", &KaplanNorm::distance)
        .def("ball_volume", &KaplanNorm::ball_volume)
        .def("calibrate", &KaplanNorm::calibrate, py::arg("residual_tol") = 1e-2);
    m.def("calibrated_norm", &calibrated_norm, py::arg("alg"));

    py::class_<SphereQuadrature>(m, "SphereQuadrature")
        .def_property_readonly("size", &SphereQuadrature::size)
        .def("weight_sum", &SphereQuadrature::weight_sum)
        .def("checksum", &SphereQuadrature::checksum);
    m.def("build_sphere_quadrature", &build_sphere_quadrature, py::arg("K"),
          py::arg("node_count"), py::arg("seed"), py::arg("shell_a") = 0.7,
          py::arg("shell_b") = 1.3);
    m.def("kappa", &kappa, py::arg("K"), py::arg("quad"), py::arg("p"));
    m.def("flow_point", &flow_point, py::arg("K"), py::arg("y"), py::arg("s"),
          py::arg("step") = 1e-3);

    m.def("ring_capacity", &ring_capacity, py::arg("K"), py::arg("p"), py::arg("r"),
          py::arg("R"), py::arg("kappa_p"));
    m.def(
        "variational_ring_capacity",
        [](const KaplanNorm& K, double r, double R, double p, int grid_n) {
            return variational_capacity(K, Condenser::ring(K.algebra().origin(), r, R), p,
                                        grid_n)
                .value;
        },
        py::arg("K"), py::arg("r"), py::arg("R"), py::arg("p"), py::arg("grid_n") = 32);
    m.def("default_loewner_constant", &default_loewner_constant);

    py::class_<QRMapDescriptor>(m, "QRMapDescriptor")
        .def_static("parse", &QRMapDescriptor::parse, py::arg("text"), py::arg("alg"))
        .def("describe", &QRMapDescriptor::describe)
        .def("is_conformal", &QRMapDescriptor::is_conformal)
        .def("total_winding", &QRMapDescriptor::total_winding);
    m.def("apply_map", &apply, py::arg("alg"), py::arg("f"), py::arg("p"));
    m.def(
        "distortion",
        [](const KaplanNorm& K, const QRMapDescriptor& f, double radius, int samples,
           uint64_t seed) {
            Distortion d = distortion(K, f, radius, samples, seed);
            return py::make_tuple(d.K, d.K_O, d.K_I);
        },
        py::arg("K"), py::arg("f"), py::arg("radius") = 1.5, py::arg("samples") = 20000,
        py::arg("seed") = 1);
    m.def("counting_n", &counting_n, py::arg("K"), py::arg("f"), py::arg("r"), py::arg("y"));

    m.def(
        "nu_average",
        [](const KaplanNorm& K, const SphereQuadrature& quad, const QRMapDescriptor& f,
           double r, const GroupPoint& w, double s) {
            Estimate e = nu_average(K, quad, f, r, w, s);
            return py::make_tuple(e.value, e.std_error);
        },
        py::arg("K"), py::arg("quad"), py::arg("f"), py::arg("r"), py::arg("w"),
        py::arg("s"));

    py::class_<ASamples>(m, "ASamples")
        .def_readonly("r", &ASamples::r)
        .def_readonly("a", &ASamples::a)
        .def("__call__", &ASamples::operator());
    m.def("sample_a_of_r", &sample_a_of_r, py::arg("K"), py::arg("quad"), py::arg("f"),
          py::arg("r_lo"), py::arg("r_hi"), py::arg("count"), py::arg("radial_steps") = 128);

    py::class_<ExceptionalSet>(m, "ExceptionalSet")
        .def_readonly("total_log_measure", &ExceptionalSet::total_log_measure)
        .def_readonly("eps0", &ExceptionalSet::eps0)
        .def("contains", &ExceptionalSet::contains)
        .def("omega", &ExceptionalSet::omega);
    m.def("exceptional_set", &exceptional_set, py::arg("A"), py::arg("eps0"), py::arg("Q"),
          py::arg("K_I") = 1.0, py::arg("max_tier") = 24, py::arg("grid_per_decade") = 400);

    py::class_<DecompositionReport>(m, "DecompositionReport")
        .def_readonly("s", &DecompositionReport::s)
        .def_readonly("sprime", &DecompositionReport::sprime)
        .def_readonly("theta", &DecompositionReport::theta)
        .def_readonly("varkappa", &DecompositionReport::varkappa)
        .def_readonly("rings", &DecompositionReport::rings)
        .def_readonly("measured_C3", &DecompositionReport::measured_C3)
        .def_readonly("max_U_multiplicity", &DecompositionReport::max_U_multiplicity)
        .def_readonly("max_Z_multiplicity", &DecompositionReport::max_Z_multiplicity)
        .def_readonly("z_multiplicity_bound", &DecompositionReport::z_multiplicity_bound)
        .def_readonly("cover_ok", &DecompositionReport::cover_ok)
        .def_property_readonly("ball_count", [](const DecompositionReport& r) {
            return r.balls.size();
        });
    m.def("ball_decomposition", &ball_decomposition, py::arg("K"), py::arg("s"),
          py::arg("sprime"), py::arg("varpi"), py::arg("M"), py::arg("K_O"), py::arg("K_I"),
          py::arg("c_Q"), py::arg("denom") = 1.0, py::arg("seed") = 1,
          py::arg("cover_samples") = 10000);

    py::class_<DefectReport>(m, "DefectReport")
        .def_readonly("sigma_M", &DefectReport::sigma_M)
        .def_readonly("sigma_m", &DefectReport::sigma_m)
        .def_readonly("n_values", &DefectReport::n_values)
        .def_readonly("defects", &DefectReport::defects)
        .def_readonly("delta", &DefectReport::delta)
        .def_readonly("defect_sum", &DefectReport::defect_sum);
    m.def("defect_report", &defect_report, py::arg("K"), py::arg("quad"), py::arg("f"),
          py::arg("r"), py::arg("targets"), py::arg("infinity_target") = false);
}
