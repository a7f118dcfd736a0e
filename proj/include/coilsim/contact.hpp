#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "coilsim/mesh.hpp"
#include "coilsim/octree.hpp"
#include "coilsim/rod.hpp"
#include "coilsim/types.hpp"

namespace coilsim {

struct ContactParams {
  double k_sc = 4e2;       // coil-coil penalty stiffness [N/m]
  double k_w = 4e2;        // coil-wall penalty stiffness [N/m]
  double gamma_sc = 0.01;  // coil-coil dissipation [N s/m]
  double gamma_w = 0.01;   // coil-wall dissipation [N s/m]
  double mu_slip_cc = 0.6;
  double mu_slip_cw = 0.6;
  double mu_stick_cw = 0.9;
  double v_eps = 1e-8;     // stick/slip switch threshold [m/s]

  void validate() const;
};

// Closest points between segments p1-q1 and p2-q2 (Lumelsky-style clamped
// parameters). delta = closest2 - closest1.
struct SegmentClosest {
  Vec3 delta;
  double s = 0, t = 0;
  double distance() const { return delta.norm(); }
};

SegmentClosest segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                        const Vec3& q2);

// Candidate edge pairs (i < j, |i-j| >= 2) whose center spheres overlap:
// ||c_j - c_i|| <= sqrt((lbar/2)^2 + D2^2). The tree must be built over the
// current edge centers.
std::vector<std::pair<int, int>> broad_phase_self(const RodState& state, const Octree& tree,
                                                  double lbar, double D2);

// Candidate (edge, triangle) pairs with ||c_i - c_T|| <= D2/2 + r_ST + margin.
// margin = 0 reproduces the paper's filter; the step driver passes half the
// max edge length so node-attached narrow-phase tests are fully covered.
std::vector<std::pair<int, int>> broad_phase_wall(const RodState& state, const TriangleMesh& mesh,
                                                  const Octree& tri_tree, double D2,
                                                  double margin = 0.0);

// Brute-force candidate sets under the same metric conditions (test oracle).
std::vector<std::pair<int, int>> broad_phase_self_brute(const RodState& state, double lbar,
                                                        double D2);
std::vector<std::pair<int, int>> broad_phase_wall_brute(const RodState& state,
                                                        const TriangleMesh& mesh, double D2,
                                                        double margin = 0.0);

// Projects the point onto the triangle plane; contact iff the projection is
// inside the triangle and the plane distance is within `radius` (= D2/2).
struct PointTriangleContact {
  double penetration;      // radius - |plane distance|
  double signed_distance;  // along the outward normal, negative inside
  Vec3 normal;             // outward triangle normal
};
std::optional<PointTriangleContact> edge_triangle_contact(const Vec3& point,
                                                          const TriangleMesh& mesh, int tri,
                                                          double radius);

// Normal + slip-friction force of one coil-coil contact, distributed to the
// four incident nodes with barycentric weights. Forces on edge j's nodes are
// the exact negatives of edge i's (Newton's third law by construction).
struct CoilCoilForce {
  Vec3 on_i0, on_i1, on_j0, on_j1;
  double normal_magnitude = 0;
};
CoilCoilForce coil_coil_force(const RodState& state, int edge_i, int edge_j,
                              const SegmentClosest& cp, double D2, const ContactParams& p);

// Wall reaction at a node: support normal force (reflecting the internal
// load pressed into the wall) plus stick/slip Coulomb friction.
Vec3 coil_wall_force(const Vec3& normal, double penetration, const Vec3& velocity,
                     const Vec3& f_internal, const ContactParams& p);

// Open tube (no caps) swept along the quadratic B-spline through 3 control
// points; normals point away from the spline axis.
TriangleMesh catheter_mesh(const std::array<Vec3, 3>& spline_nodes, double radius,
                           int circ_segments, int axial_segments);

// Full contact pass used by the integrator: accumulates coil-coil and
// coil-wall forces (cavity + optional catheter tube) in sorted pair order.
struct WallMeshRef {
  const TriangleMesh* mesh = nullptr;
  const Octree* tree = nullptr;  // built over triangle centroids
  // Two-sided obstacles (the catheter tube) take contacts on both faces;
  // one-sided walls (the cavity) keep the coil on the interior side and
  // feed the penetration monitor.
  bool two_sided = false;
};

struct ContactAccumulator {
  std::vector<Vec3> forces;           // per node
  double max_wall_penetration = 0.0;  // rod-surface depth past the wall plane
  int num_coil_coil = 0;
  int num_coil_wall = 0;

  // scratch reused across steps
  std::vector<Vec3> centers;
  std::vector<int> hits;
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::pair<int, int>> node_tri;
};

// shielded, when given, marks nodes inside the catheter tube: the tube wall
// stands between them and everything else, so they take no wall contacts and
// coil-coil pairs touching them are dropped (the tube mesh mediates
// instead). active_edges restricts candidate generation to edges below that
// index; with the frozen chain being a trailing suffix this is exact.
void accumulate_contact_forces(const RodState& state, double lbar, double D2,
                               const ContactParams& params,
                               const std::vector<Vec3>& internal_forces,
                               const std::vector<WallMeshRef>& walls, Octree& edge_tree,
                               ContactAccumulator& acc,
                               const std::vector<uint8_t>* shielded = nullptr,
                               int active_edges = -1);

}  // namespace coilsim
