#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coilsim/analysis.hpp"
#include "coilsim/dynamics.hpp"
#include "coilsim/io.hpp"
#include "coilsim/scenario.hpp"
#include "coilsim/shapes.hpp"

namespace py = pybind11;
using namespace coilsim;

namespace {

py::array_t<double> field_to_numpy(const Lattice& lat, const std::vector<double>& values) {
  auto arr = py::array_t<double>({lat.dims[0], lat.dims[1], lat.dims[2]});
  auto buf = arr.mutable_unchecked<3>();
  for (int k = 0; k < lat.dims[2]; ++k)
    for (int j = 0; j < lat.dims[1]; ++j)
      for (int i = 0; i < lat.dims[0]; ++i) buf(i, j, k) = values[lat.index(i, j, k)];
  return arr;
}

py::dict report_to_dict(const OcclusionReport& rep) {
  py::dict fractions;
  fractions["psi_BA"] = rep.fractions.psi_BA;
  fractions["psi_CA"] = rep.fractions.psi_CA;
  fractions["psi_AA"] = rep.fractions.psi_AA;
  fractions["psi_SS"] = rep.fractions.psi_SS;
  py::dict densities;
  densities["core_pd"] = rep.densities.core_pd;
  densities["boundary_pd"] = rep.densities.boundary_pd;
  densities["sphere_pd"] = rep.densities.sphere_pd;
  py::dict out;
  out["class"] = to_string(rep.occlusion);
  out["fractions"] = fractions;
  out["densities"] = densities;
  return out;
}

}  // namespace

PYBIND11_MODULE(_coilsim, m) {
  m.doc() = "Elastic-wire deployment simulator: rod mechanics, contact, occlusion analysis";

  py::register_exception<Error>(m, "CoilsimError");

  // --- rod core ---
  m.def("parallel_transport", &parallel_transport, py::arg("t_from"), py::arg("t_to"));
  m.def("curvature_binormal", &curvature_binormal, py::arg("t_prev"), py::arg("t_next"));

  py::class_<Stiffness>(m, "Stiffness")
      .def(py::init<>())
      .def_readwrite("stretch", &Stiffness::stretch)
      .def_readwrite("bend", &Stiffness::bend)
      .def_readwrite("twist", &Stiffness::twist);

  py::class_<NaturalShape>(m, "NaturalShape")
      .def_property_readonly("rest_edge_lengths",
                             [](const NaturalShape& n) { return n.rest_edge_lengths; })
      .def_property_readonly("voronoi_lengths",
                             [](const NaturalShape& n) { return n.voronoi_lengths; })
      .def_property_readonly("rest_curvatures",
                             [](const NaturalShape& n) {
                               std::vector<std::pair<double, double>> out;
                               for (const Vec2& k : n.rest_curvatures)
                                 out.emplace_back(k.x(), k.y());
                               return out;
                             })
      .def("total_length", &NaturalShape::total_length);

  py::class_<RodState>(m, "RodState")
      .def_property_readonly("positions", [](const RodState& s) { return s.positions; })
      .def_property_readonly("velocities", [](const RodState& s) { return s.velocities; })
      .def_property_readonly("twist_angles", [](const RodState& s) { return s.twist_angles; })
      .def("validate", &RodState::validate);

  m.def("make_rod_state", &make_rod_state, py::arg("centerline"));
  m.def("build_natural_shape", &build_natural_shape, py::arg("centerline"));
  m.def("total_energy", &total_energy, py::arg("state"), py::arg("natural"), py::arg("stiffness"));
  m.def("force_gradient", &force_gradient, py::arg("state"), py::arg("natural"),
        py::arg("stiffness"));
  m.def("twist_moment_gradient", &twist_moment_gradient, py::arg("state"), py::arg("natural"),
        py::arg("stiffness"));

  // --- shapes ---
  py::class_<CoilSpec>(m, "CoilSpec")
      .def(py::init<>())
      .def_readwrite("D1", &CoilSpec::D1)
      .def_readwrite("D2", &CoilSpec::D2)
      .def_readwrite("D3", &CoilSpec::D3)
      .def_readwrite("pitch_factor", &CoilSpec::pitch_factor)
      .def_readwrite("E_w", &CoilSpec::E_w)
      .def_readwrite("mu_w", &CoilSpec::mu_w)
      .def_readwrite("rho", &CoilSpec::rho);

  m.def("spring_constants", &spring_constants, py::arg("spec"), py::arg("stretch_alpha") = 0.1);
  m.def("node_mass", &node_mass, py::arg("spec"), py::arg("edge_length"));
  m.def("make_straight", &make_straight, py::arg("length"), py::arg("edge_length"));
  m.def("make_helix", &make_helix, py::arg("D3"), py::arg("helix_pitch"), py::arg("length"),
        py::arg("edge_length"));
  m.def("make_3d_frame_shape", &make_3d_frame_shape, py::arg("D3"), py::arg("length"),
        py::arg("edge_length"), py::arg("seed"));

  // --- contact primitives ---
  m.def(
      "segment_segment_distance",
      [](const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
        SegmentClosest c = segment_segment_distance(p1, q1, p2, q2);
        return py::make_tuple(c.distance(), c.s, c.t);
      },
      py::arg("p1"), py::arg("q1"), py::arg("p2"), py::arg("q2"));

  // --- meshes and geometry ---
  py::class_<TriangleMesh>(m, "TriangleMesh")
      .def_property_readonly("vertices", [](const TriangleMesh& t) { return t.vertices; })
      .def_property_readonly("triangles", [](const TriangleMesh& t) { return t.triangles; })
      .def("num_triangles", &TriangleMesh::num_triangles);

  m.def("load_mesh", &load_mesh, py::arg("path"));
  m.def("save_stl", &save_stl, py::arg("mesh"), py::arg("path"));
  m.def("mesh_volume", &mesh_volume, py::arg("mesh"));
  m.def("point_in_mesh", &point_in_mesh, py::arg("mesh"), py::arg("point"));
  m.def("make_icosphere", &make_icosphere, py::arg("radius"), py::arg("subdivisions"),
        py::arg("center") = Vec3::Zero());
  m.def("make_sphere_with_neck", &make_sphere_with_neck, py::arg("radius"), py::arg("neck_radius"),
        py::arg("neck_length"), py::arg("target_edge"));

  m.def(
      "build_sdf",
      [](const TriangleMesh& mesh, int n, double pad) {
        Lattice lat = cavity_lattice(mesh, n, pad);
        SignedDistanceGrid sdf = build_sdf(mesh, lat);
        py::dict out;
        out["values"] = field_to_numpy(lat, sdf.values);
        out["origin"] = lat.origin;
        out["spacing"] = lat.spacing;
        return out;
      },
      py::arg("mesh"), py::arg("n") = 70, py::arg("pad") = 0.0);

  // --- analysis ---
  m.def(
      "voxelize",
      [](const std::vector<Vec3>& centerline, double D2, const TriangleMesh& cavity, int n) {
        Lattice lat = cavity_lattice(cavity, n, D2);
        VoxelGrid grid = voxelize(centerline, D2, lat);
        py::dict out;
        out["values"] = field_to_numpy(lat, grid.values);
        out["origin"] = lat.origin;
        out["spacing"] = lat.spacing;
        out["volume"] = voxel_volume(grid);
        return out;
      },
      py::arg("centerline"), py::arg("D2"), py::arg("cavity"), py::arg("n") = 70);

  m.def(
      "classify",
      [](double core_pd, double boundary_pd, double sphere_pd, double core_th, double boundary_th,
         double sphere_th) {
        return to_string(
            classify(core_pd, boundary_pd, sphere_pd, {core_th, boundary_th, sphere_th}));
      },
      py::arg("core_pd"), py::arg("boundary_pd"), py::arg("sphere_pd"), py::arg("core_th") = 0.20,
      py::arg("boundary_th") = 0.18, py::arg("sphere_th") = 0.18);

  // --- scenario / end-to-end ---
  m.def(
      "run_deployment",
      [](const std::string& config_path, uint64_t seed, const Vec3& tip_offset) {
        Scenario sc = load_scenario(config_path);
        if (seed) sc.seed = seed;
        RunOutput out = run_deployment(sc, sc.seed, tip_offset);
        py::dict d;
        d["centerline"] = out.final_centerline;
        d["inserted_length"] = out.diagnostics.inserted_length;
        d["length_based_psi"] = out.length_based_psi;
        d["max_wall_penetration"] = out.diagnostics.max_wall_penetration;
        d["max_containment_violation"] = out.diagnostics.max_containment_violation;
        d["final_energy"] = out.diagnostics.final_energy;
        d["steps"] = out.diagnostics.steps;
        d["report"] = report_to_dict(out.report);
        return d;
      },
      py::arg("config_path"), py::arg("seed") = 0, py::arg("tip_offset") = Vec3::Zero(),
      "Run one deployment from a JSON config; returns the final centerline and the report.");

  m.attr("__version__") = version_string();
}
