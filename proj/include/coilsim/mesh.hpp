#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "coilsim/types.hpp"

namespace coilsim {

// Triangulated surface with per-triangle derived data used by the contact
// broad phase: outward unit normal, centroid, and the exact radius of the
// centroid-centered bounding sphere (max centroid-to-vertex distance).
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  std::vector<Vec3> normals;
  std::vector<Vec3> centroids;
  std::vector<double> bound_radius;  // r_ST

  int num_triangles() const { return static_cast<int>(triangles.size()); }

  Vec3 vertex_of(int tri, int corner) const { return vertices[triangles[tri][corner]]; }

  // Fills normals/centroids/bound_radius. Throws DegenerateTriangle on
  // zero-area faces.
  void compute_derived();

  double max_edge_length() const;
  double max_bound_radius() const;

  // Translate/scale helpers used by fixtures.
  void translate(const Vec3& offset);
};

struct MeshValidation {
  bool watertight = false;    // every edge shared by exactly two triangles
  bool oriented = false;      // consistent winding across shared edges
  int boundary_edges = 0;
  int nonmanifold_edges = 0;
  double max_edge_length = 0;
  double signed_volume = 0;   // positive for outward orientation
};

MeshValidation validate_mesh(const TriangleMesh& mesh);

// Signed volume via the divergence theorem. Throws NotWatertight unless the
// mesh is closed and consistently oriented.
double mesh_volume(const TriangleMesh& mesh);

// Parity point-in-mesh test (jittered ray, deterministic retries).
bool point_in_mesh(const TriangleMesh& mesh, const Vec3& point);

// Exact unsigned distance from a point to the mesh surface (brute force
// over triangles; use SdfBuilder for lattice-scale workloads).
double point_mesh_distance(const TriangleMesh& mesh, const Vec3& point);

// Minimum distance from a point to one triangle.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// --- ingestion ---------------------------------------------------------

// Reads STL (binary or ASCII, auto-detected) or OBJ by file extension;
// duplicate vertices are merged exactly.
TriangleMesh load_mesh(const std::string& path);
void save_stl(const TriangleMesh& mesh, const std::string& path);

// Ingestion report printed on load: watertightness and the mesh-resolution
// check (edge length vs 2*D2) from the contact model's assumptions.
std::string ingestion_report(const TriangleMesh& mesh, double D2);

// --- synthetic fixtures -------------------------------------------------

// Subdivided icosahedron of the given radius, outward orientation.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

// Closed cavity: sphere of `radius` with a cylindrical neck tube of
// `neck_radius` and `neck_length` along +z, capped at the far end. Target
// triangle edge length controls the tessellation.
TriangleMesh make_sphere_with_neck(double radius, double neck_radius, double neck_length,
                                   double target_edge);

// Same cavity built from a subdivided icosahedron: the polar cap inside the
// neck cone is removed and the hole is stitched to the tube by an
// azimuth-merge band. Watertight, outward orientation.
TriangleMesh make_icosphere_with_neck(double radius, double neck_radius, double neck_length,
                                      int subdivisions);

}  // namespace coilsim
