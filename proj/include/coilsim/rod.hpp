#pragma once

#include <optional>
#include <vector>

#include "coilsim/types.hpp"

namespace coilsim {

// Orthonormal right-handed director triad attached to an edge; d3 is the
// edge tangent (the frame is "adapted").
struct Director {
  Vec3 d1, d2, d3;
};

// Discretized rod: N nodes, N-1 edges. Twist angles are measured relative
// to the stored reference frames; with Bishop-propagated references the
// material twist of edge j is twist_angles[j] - twist_angles[j-1].
struct RodState {
  std::vector<Vec3> positions;       // N
  std::vector<double> twist_angles;  // N-1
  std::vector<Vec3> velocities;      // N
  std::vector<Director> ref_frames;  // N-1

  int num_nodes() const { return static_cast<int>(positions.size()); }
  int num_edges() const { return static_cast<int>(positions.size()) - 1; }

  Vec3 edge(int j) const { return positions[j + 1] - positions[j]; }

  // Throws on violated invariants (sizes, orthonormality, adapted frames,
  // degenerate edges). Used by tests and at API boundaries.
  void validate() const;
};

// Rest quantities of the imprinted coil shape. voronoi_lengths[i-1] and
// rest_curvatures[i-1] belong to interior node i; rest_twists[i-1] to the
// edge pair (i-1, i).
struct NaturalShape {
  std::vector<double> rest_edge_lengths;  // N-1
  std::vector<double> voronoi_lengths;    // N-2
  std::vector<Vec2> rest_curvatures;      // N-2
  std::vector<double> rest_twists;        // N-2

  int num_edges() const { return static_cast<int>(rest_edge_lengths.size()); }

  double min_edge_length() const;
  double total_length() const;
};

struct Stiffness {
  double stretch = 0.1;  // alpha [J/m]
  double bend = 0.0;     // b [N m^2], isotropic B = b I
  double twist = 0.0;    // beta [N m^2]
};

// Rotation taking t_from to t_to about t_from x t_to (Rodrigues form).
// Throws AntiParallelTangents when t_from . t_to <= -1 + 1e-9.
Mat3 parallel_transport(const Vec3& t_from, const Vec3& t_to);

// Applies the same rotation to a single vector without forming the matrix.
Vec3 parallel_transport_vec(const Vec3& v, const Vec3& t_from, const Vec3& t_to);

// Integrated curvature binormal 2 (t_prev x t_next) / (1 + t_prev . t_next).
Vec3 curvature_binormal(const Vec3& t_prev, const Vec3& t_next);

// Material frames: reference frame of each edge rotated about its tangent
// by the edge's twist angle.
std::vector<Director> material_frames(const RodState& state);

// Material curvature pair per interior node, Eq.-(6)-style projection of the
// curvature binormal onto averaged directors.
std::vector<Vec2> nodal_curvatures(const RodState& state);

// tau^j = phi^j - phi^{j-1}, one value per interior junction (N-2).
std::vector<double> edge_twists(const RodState& state);

// Angle by which ref frame j deviates from the space-parallel transport of
// ref frame j-1; zero for Bishop-propagated frames. Diagnostic for the
// twist-free property.
std::vector<double> reference_frame_twists(const RodState& state);

// Time-parallel transport of every edge frame onto the new tangents, with
// one Gram-Schmidt pass to bound orthonormality drift. Positions are
// replaced, velocities and twist angles are carried over.
RodState update_reference_frames(const RodState& state, const std::vector<Vec3>& new_positions);

// Enriched discrete strain energy: stretch + isotropic bending + twist.
double total_energy(const RodState& state, const NaturalShape& nat, const Stiffness& k);

// Internal force -grad_X E_tot (twist angles and reference frames held
// fixed). Matched against central finite differences in the tests.
std::vector<Vec3> force_gradient(const RodState& state, const NaturalShape& nat, const Stiffness& k);

// grad_Phi E_tot, one entry per edge.
std::vector<double> twist_moment_gradient(const RodState& state, const NaturalShape& nat, const Stiffness& k);

// Measures rest lengths and rest curvatures of a centerline with its Bishop
// frame as material frame; rest twist is zero in that parametrization.
NaturalShape build_natural_shape(const std::vector<Vec3>& centerline);

// Twist-free adapted frames propagated along the polyline. first_d1, when
// given, is projected perpendicular to the first tangent; otherwise an
// arbitrary deterministic normal is used.
std::vector<Director> bishop_frames(const std::vector<Vec3>& centerline,
                                    const std::optional<Vec3>& first_d1 = std::nullopt);

// Rod at rest on the given centerline: Bishop frames, zero twist angles,
// zero velocities.
RodState make_rod_state(const std::vector<Vec3>& centerline);

// Deterministic unit vector perpendicular to t.
Vec3 perpendicular_unit(const Vec3& t);

namespace detail {

// Buffer-reusing versions for the integration hot loop. Outputs are resized
// as needed; "forces" receives -grad_X E, "moments" receives grad_Phi E.
// active_nodes < N restricts assembly to nodes [0, active_nodes); the feed
// driver uses it because the frozen trailing chain is straight and at rest
// spacing, where every term is exactly zero.
struct RodForceWorkspace {
  std::vector<Vec3> tangents;
  std::vector<double> lengths;
  std::vector<Director> mat_frames;
};

void internal_forces(const RodState& state, const NaturalShape& nat, const Stiffness& k,
                     RodForceWorkspace& ws, std::vector<Vec3>& forces, std::vector<double>& moments,
                     int active_nodes = -1);

}  // namespace detail

}  // namespace coilsim
