#pragma once

#include <array>
#include <functional>
#include <vector>

#include "coilsim/contact.hpp"
#include "coilsim/mesh.hpp"
#include "coilsim/octree.hpp"
#include "coilsim/rod.hpp"
#include "coilsim/types.hpp"

namespace coilsim {

struct SimConfig {
  double dt = 0.0;                 // 0 -> stability estimate
  Vec3 v_push = Vec3::Zero();      // feed velocity [m/s]
  double eta_x = 1e-2;             // translational damping [N s]
  double eta_phi = 1e-9;           // rotational damping [N m s]
  double node_mass = 0.0;          // lumped node mass [kg]
  double psi_target = 0.2;         // target packing density
  Vec3 body_accel = Vec3::Zero();  // optional body force (gravity) [m/s^2]
  bool release_wall_after_insertion = true;  // swap to the full geometry
  double settle_time = 0.5;        // relaxation after feed [s]
  int snapshot_every = 0;          // steps between checkpoints, 0 = none
  double max_sim_time = 0.0;       // hard cap, 0 = derived from feed+settle

  void validate() const;
};

// Safety-scaled explicit stability estimate from the stiffest of the rod and
// contact penalties.
double stable_dt(double mass, double edge_length, const Stiffness& k, const ContactParams& cp);

// Rigid micro-catheter: quadratic B-spline through three control points,
// triangulated tube obstacle, and the node-membership test for the feed
// boundary condition.
class Catheter {
 public:
  Catheter(const std::array<Vec3, 3>& control, double radius, int circ_segments = 24,
           int axial_segments = 0);

  const TriangleMesh& mesh() const { return mesh_; }
  const Octree& tree() const { return tree_; }
  double radius() const { return radius_; }
  const std::array<Vec3, 3>& control() const { return control_; }

  Vec3 point_at(double s) const;
  Vec3 tangent_at(double s) const;
  Vec3 tip() const { return control_[2]; }
  Vec3 inlet() const { return control_[0]; }

  // Parameter of the closest spline point (dense sampling + refinement).
  double closest_param(const Vec3& p) const;

  // Distance to the spline axis < radius and parameter within the extent.
  bool contains(const Vec3& p) const;

  // Behind the inlet along the negative inlet tangent (approach line).
  bool behind_inlet(const Vec3& p) const;

 private:
  std::array<Vec3, 3> control_;
  double radius_;
  Vec3 tangent_in_, tangent_out_;  // cached end tangents
  double chord_dev_;               // max spline-to-chord deviation
  TriangleMesh mesh_;
  Octree tree_;
};

// Indices of nodes inside the catheter tube.
std::vector<int> catheter_membership(const RodState& state, const Catheter& catheter);

// psi = (pi D2^2 / 4) * L / V_aneu.
double packing_density(double inserted_length, double D2, double cavity_volume);

// Inverse of packing_density for the coil length.
double coil_length_for_density(double psi_target, double D2, double cavity_volume);

// One symplectic Euler step. Velocity overrides (feed boundary condition)
// are applied before the position update; reference frames are
// time-parallel-transported after it. Throws StepDiverged when any node
// moves more than half a rest edge length.
struct StepInputs {
  const std::vector<Vec3>* external_forces = nullptr;  // contacts + body, per node
  const std::vector<int>* velocity_override_nodes = nullptr;
  Vec3 override_velocity = Vec3::Zero();
  // Nodes >= active_nodes form a rigidly translating straight chain (the
  // not-yet-fed part of the coil); elasticity and frame transport are
  // skipped there, which is exact for that configuration.
  int active_nodes = -1;
};

void step(RodState& state, const NaturalShape& nat, const Stiffness& k, const StepInputs& in,
          const SimConfig& cfg);

// --- deployment driver ------------------------------------------------------

struct Snapshot {
  double time = 0;
  std::vector<Vec3> positions;
};

struct DeploymentDiagnostics {
  double max_wall_penetration = 0;   // rod-surface depth past the wall [m]
  double final_energy = 0;
  double initial_energy = 0;
  double inserted_length = 0;
  double wall_swap_time = -1;        // -1 if the swap never happened
  double sim_time = 0;
  long long steps = 0;
  int membership_reentries = 0;      // monotonicity violations (logged)
  double max_containment_violation = 0;  // signed distance of worst node [m]
};

struct DeploymentSetup {
  NaturalShape natural;
  Stiffness stiffness;
  double D2 = 0;
  ContactParams contact;
  SimConfig sim;
  const TriangleMesh* cavity_feed = nullptr;  // necked-off geometry during feed
  const TriangleMesh* cavity_full = nullptr;  // geometry after the swap
  const Catheter* catheter = nullptr;
};

struct DeploymentResult {
  RodState final_state;
  std::vector<Snapshot> snapshots;
  DeploymentDiagnostics diagnostics;
};

// Feeds the coil through the catheter at v_push until the full length has
// exited, swaps to the full wall geometry, and settles. The per-step callback
// (optional) can abort by returning false.
DeploymentResult insert_coil(const DeploymentSetup& setup,
                             const std::function<bool(long long, const RodState&)>& on_step = {});

}  // namespace coilsim
