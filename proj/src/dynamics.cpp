#include "coilsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coilsim {

void SimConfig::validate() const {
  if (!(dt >= 0)) throw InvalidConfig("SimConfig: dt must be >= 0");
  if (!(node_mass > 0)) throw InvalidConfig("SimConfig: node mass must be positive");
  if (!(eta_x >= 0 && eta_phi >= 0)) throw InvalidConfig("SimConfig: damping must be >= 0");
  if (!(psi_target > 0 && psi_target < 1))
    throw InvalidConfig("SimConfig: packing density target must be in (0, 1)");
}

double stable_dt(double mass, double edge_length, const Stiffness& k, const ContactParams& cp) {
  double dt = std::sqrt(mass * edge_length * edge_length * edge_length / k.bend);
  if (k.stretch > 0) dt = std::min(dt, std::sqrt(mass * edge_length / k.stretch));
  if (cp.k_w > 0) dt = std::min(dt, std::sqrt(mass / cp.k_w));
  if (cp.k_sc > 0) dt = std::min(dt, std::sqrt(mass / cp.k_sc));
  // 0.3: linear stability needs 0.5, contact jamming against the natural
  // curvature needs extra headroom (kink stiffness grows with the angle).
  return 0.3 * dt;
}

Catheter::Catheter(const std::array<Vec3, 3>& control, double radius, int circ_segments,
                   int axial_segments)
    : control_(control), radius_(radius) {
  double chord = (control[2] - control[0]).norm();
  if (chord == 0) throw DegenerateSpline("Catheter: coincident end points");
  if (axial_segments <= 0) {
    // Elongated facets keep the obstacle tight while holding the triangle
    // count (and broad-phase volume) down.
    double ring_edge = 2.0 * M_PI * radius / circ_segments;
    axial_segments = std::max(4, static_cast<int>(std::ceil(chord / (2.5 * ring_edge))));
  }
  mesh_ = catheter_mesh(control, radius, circ_segments, axial_segments);
  tree_.build(mesh_.centroids);
  tangent_in_ = tangent_at(0.0);
  tangent_out_ = tangent_at(1.0);
  chord_dev_ = 0.25 * (2.0 * control_[1] - control_[0] - control_[2]).norm();
}

Vec3 Catheter::point_at(double s) const {
  double u = 1.0 - s;
  return u * u * control_[0] + 2.0 * u * s * control_[1] + s * s * control_[2];
}

Vec3 Catheter::tangent_at(double s) const {
  Vec3 d = 2.0 * (1.0 - s) * (control_[1] - control_[0]) + 2.0 * s * (control_[2] - control_[1]);
  double n = d.norm();
  if (n == 0) throw DegenerateSpline("Catheter: vanishing tangent");
  return d / n;
}

double Catheter::closest_param(const Vec3& p) const {
  // Coarse scan plus ternary refinement; the squared distance is smooth in
  // the quadratic parameter.
  constexpr int kCoarse = 32;
  double best_s = 0.0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kCoarse; ++i) {
    double s = static_cast<double>(i) / kCoarse;
    double d = (point_at(s) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  double lo = std::max(0.0, best_s - 1.0 / kCoarse);
  double hi = std::min(1.0, best_s + 1.0 / kCoarse);
  for (int it = 0; it < 40; ++it) {
    double m1 = lo + (hi - lo) / 3.0;
    double m2 = hi - (hi - lo) / 3.0;
    if ((point_at(m1) - p).squaredNorm() < (point_at(m2) - p).squaredNorm())
      hi = m2;
    else
      lo = m1;
  }
  return 0.5 * (lo + hi);
}

bool Catheter::contains(const Vec3& p) const {
  // Within the tube extent: between the inlet and tip planes.
  if ((p - control_[2]).dot(tangent_out_) >= 0.0) return false;
  if ((p - control_[0]).dot(tangent_in_) < 0.0) return false;

  // Cheap reject against the chord capsule: the quadratic spline deviates
  // from its chord by at most |2 P1 - P0 - P2| / 4.
  Vec3 chord = control_[2] - control_[0];
  double len2 = chord.squaredNorm();
  double t = std::clamp((p - control_[0]).dot(chord) / len2, 0.0, 1.0);
  double d_chord = (p - (control_[0] + t * chord)).norm();
  if (d_chord > radius_ + chord_dev_) return false;

  double s = closest_param(p);
  return (point_at(s) - p).norm() < radius_;
}

bool Catheter::behind_inlet(const Vec3& p) const {
  return (p - control_[0]).dot(tangent_in_) < 0.0;
}

std::vector<int> catheter_membership(const RodState& state, const Catheter& catheter) {
  std::vector<int> out;
  for (int i = 0; i < state.num_nodes(); ++i)
    if (catheter.contains(state.positions[i])) out.push_back(i);
  return out;
}

double packing_density(double inserted_length, double D2, double cavity_volume) {
  if (!(D2 > 0) || !(cavity_volume > 0))
    throw InvalidConfig("packing_density: non-positive input");
  return 0.25 * M_PI * D2 * D2 * inserted_length / cavity_volume;
}

double coil_length_for_density(double psi_target, double D2, double cavity_volume) {
  return psi_target * cavity_volume / (0.25 * M_PI * D2 * D2);
}

namespace {

struct StepBuffers {
  detail::RodForceWorkspace ws;
  std::vector<Vec3> forces;
  std::vector<double> moments;
  std::vector<Vec3> new_positions;
};

void step_impl(RodState& state, const NaturalShape& nat, const Stiffness& k, const StepInputs& in,
               const SimConfig& cfg, StepBuffers& buf, const std::vector<Vec3>* elastic,
               const std::vector<double>* elastic_moments) {
  const int n = state.num_nodes();
  const double dt = cfg.dt;
  const double inv_m = 1.0 / cfg.node_mass;

  if (!elastic) {
    detail::internal_forces(state, nat, k, buf.ws, buf.forces, buf.moments, in.active_nodes);
    elastic = &buf.forces;
    elastic_moments = &buf.moments;
  }

  // Velocity update from forces at t_n, then the feed override.
  for (int i = 0; i < n; ++i) {
    Vec3 f = (*elastic)[i] - cfg.eta_x * state.velocities[i];
    if (in.external_forces) f += (*in.external_forces)[i];
    f += cfg.node_mass * cfg.body_accel;
    state.velocities[i] += dt * inv_m * f;
  }
  if (in.velocity_override_nodes)
    for (int i : *in.velocity_override_nodes) state.velocities[i] = in.override_velocity;

  // Positions from the new velocities; twist angles follow the damped
  // gradient flow (eta_phi = 0 freezes them).
  double max_disp2 = 0.0;
  buf.new_positions.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec3 d = dt * state.velocities[i];
    max_disp2 = std::max(max_disp2, d.squaredNorm());
    buf.new_positions[i] = state.positions[i] + d;
  }
  double limit = 0.5 * nat.min_edge_length();
  if (max_disp2 > limit * limit) {
    std::ostringstream os;
    os << "step: node displacement " << std::sqrt(max_disp2) << " m exceeds half an edge ("
       << limit << " m); reduce dt";
    throw StepDiverged(os.str());
  }

  if (cfg.eta_phi > 0)
    for (int j = 0; j < n - 1; ++j) state.twist_angles[j] -= dt / cfg.eta_phi * (*elastic_moments)[j];

  // Move and time-parallel-transport the frames. Edges in the inactive
  // chain keep their frames; they are re-transported when they unfreeze.
  int ne_upd = (in.active_nodes < 0) ? n - 1 : std::min(n - 1, in.active_nodes);
  for (int j = 0; j < ne_upd; ++j) {
    Vec3 e = buf.new_positions[j + 1] - buf.new_positions[j];
    double len = e.norm();
    if (len <= 0) throw StepDiverged("step: edge collapsed");
    Vec3 t_new = e / len;
    Director& f = state.ref_frames[j];
    Vec3 d1 = parallel_transport_vec(f.d1, f.d3, t_new);
    d1 -= d1.dot(t_new) * t_new;
    d1.normalize();
    f.d3 = t_new;
    f.d1 = d1;
    f.d2 = t_new.cross(d1);
  }
  state.positions.assign(buf.new_positions.begin(), buf.new_positions.end());
}

}  // namespace

void step(RodState& state, const NaturalShape& nat, const Stiffness& k, const StepInputs& in,
          const SimConfig& cfg) {
  static thread_local StepBuffers buf;
  step_impl(state, nat, k, in, cfg, buf, nullptr, nullptr);
}

DeploymentResult insert_coil(const DeploymentSetup& setup,
                             const std::function<bool(long long, const RodState&)>& on_step) {
  if (!setup.cavity_feed || !setup.catheter)
    throw InvalidConfig("insert_coil: cavity mesh and catheter are required");
  setup.sim.validate();
  setup.contact.validate();

  const NaturalShape& nat = setup.natural;
  const Catheter& cath = *setup.catheter;
  const double lbar = nat.rest_edge_lengths.empty() ? 0.0 : nat.rest_edge_lengths[0];
  const double L = nat.total_length();

  DeploymentResult result;

  // Straight initial configuration: leading node at the catheter tip,
  // trailing nodes back through the tube and beyond the inlet along the
  // push direction.
  double v_push_norm = setup.sim.v_push.norm();
  if (!(v_push_norm > 0)) throw InvalidConfig("insert_coil: v_push must be nonzero");
  Vec3 dir = setup.sim.v_push / v_push_norm;
  const int n = nat.num_edges() + 1;
  std::vector<Vec3> line(n);
  double arc = 0.0;
  for (int i = 0; i < n; ++i) {
    line[i] = cath.tip() - arc * dir;
    if (i < n - 1) arc += nat.rest_edge_lengths[i];
  }
  result.final_state = make_rod_state(line);
  RodState& state = result.final_state;

  DeploymentDiagnostics& diag = result.diagnostics;

  if (L <= 0 || n < 3) {  // zero-length coil: immediate completion
    diag.inserted_length = std::max(0.0, L);
    return result;
  }

  SimConfig cfg = setup.sim;
  if (cfg.dt <= 0) cfg.dt = stable_dt(cfg.node_mass, lbar, setup.stiffness, setup.contact);

  diag.initial_energy = total_energy(state, nat, setup.stiffness);

  Octree edge_tree;
  Octree feed_tree, full_tree;
  feed_tree.build(setup.cavity_feed->centroids);
  const TriangleMesh* full_mesh = setup.cavity_full ? setup.cavity_full : setup.cavity_feed;
  if (setup.cavity_full) full_tree.build(setup.cavity_full->centroids);

  const double feed_time = L / v_push_norm;
  const double total_time =
      cfg.max_sim_time > 0 ? cfg.max_sim_time : feed_time + cfg.settle_time + 1.0;

  StepBuffers buf;
  std::vector<int> frozen;
  // All nodes start in or behind the catheter; exits are one-way.
  std::vector<uint8_t> inside(n, 1), prev_inside(n, 1);
  ContactAccumulator contacts;

  bool feeding = true;
  double feed_complete_time = -1.0;
  double stall_window_exit = 0.0;
  long long stall_window_start_step = 0;
  double prev_exited = 0.0;
  // At least 1000 steps, and long enough to span several node exits so the
  // lbar-quantized exit measure cannot alias into a false stall.
  const long long stall_window =
      std::max<long long>(1000, static_cast<long long>(4.0 * lbar / (v_push_norm * cfg.dt)) + 1);

  double t = 0.0;
  long long step_index = 0;

  while (t < total_time) {
    // Feed boundary condition: nodes in the tube or behind the inlet move at
    // v_push until the whole rod has exited. Exits are one-way: a node that
    // has left the catheter is never re-frozen; geometric re-entries near
    // the tip plane are logged as monotonicity violations.
    frozen.clear();
    if (feeding) {
      for (int i = 0; i < n; ++i) {
        bool now = cath.behind_inlet(state.positions[i]) || cath.contains(state.positions[i]);
        if (now && !prev_inside[i] && inside[i] == 0) ++diag.membership_reentries;
        if (!now) inside[i] = 0;  // sticky exit
        prev_inside[i] = now ? 1 : 0;
        if (now && inside[i]) frozen.push_back(i);
      }
      if (frozen.empty()) {
        feeding = false;
        feed_complete_time = t;
        diag.wall_swap_time = setup.sim.release_wall_after_insertion ? t : -1.0;
        diag.inserted_length = L;
      }
    }

    bool use_feed_mesh = feeding || !setup.sim.release_wall_after_insertion || !setup.cavity_full;
    const TriangleMesh* wall_mesh = use_feed_mesh ? setup.cavity_feed : full_mesh;
    const Octree* wall_tree = use_feed_mesh ? &feed_tree : &full_tree;

    // Active window: everything before the first frozen node, plus margin.
    int active = frozen.empty() ? -1 : std::min(n, frozen.front() + 4);

    // Forces at t_n: elastic first; contacts see the elastic + body load.
    detail::internal_forces(state, nat, setup.stiffness, buf.ws, buf.forces, buf.moments, active);
    if (cfg.body_accel.squaredNorm() > 0) {
      int lim = active < 0 ? n : active;
      for (int i = 0; i < lim; ++i) buf.forces[i] += cfg.node_mass * cfg.body_accel;
    }

    std::vector<WallMeshRef> walls;
    walls.push_back({wall_mesh, wall_tree, false});
    walls.push_back({&cath.mesh(), &cath.tree(), true});
    accumulate_contact_forces(state, lbar, setup.D2, setup.contact, buf.forces, walls, edge_tree,
                              contacts, feeding ? &inside : nullptr, active);
    diag.max_wall_penetration = std::max(diag.max_wall_penetration, contacts.max_wall_penetration);

    StepInputs in;
    in.external_forces = &contacts.forces;
    in.active_nodes = active;
    if (!frozen.empty()) {
      in.velocity_override_nodes = &frozen;
      in.override_velocity = setup.sim.v_push;
    }
    // Body force already folded into the elastic buffer.
    SimConfig cfg_step = cfg;
    cfg_step.body_accel = Vec3::Zero();
    step_impl(state, nat, setup.stiffness, in, cfg_step, buf, &buf.forces, &buf.moments);
    t += cfg.dt;
    ++step_index;

    if (feeding) {
      double exited = 0.0;
      for (int i = 0; i < n; ++i)
        if (!inside[i]) exited += lbar;
      diag.inserted_length = exited;
      stall_window_exit += exited - prev_exited;
      prev_exited = exited;
      if (step_index - stall_window_start_step >= stall_window) {
        if (stall_window_exit < 0.1 * v_push_norm * cfg.dt * stall_window) {
          std::ostringstream os;
          os << "insert_coil: feed stalled at t=" << t << " s, inserted " << exited << " of " << L
             << " m";
          throw CoilStuck(os.str());
        }
        stall_window_exit = 0.0;
        stall_window_start_step = step_index;
      }
    } else if (t >= feed_complete_time + cfg.settle_time) {
      break;
    }

    if (cfg.snapshot_every > 0 && step_index % cfg.snapshot_every == 0)
      result.snapshots.push_back({t, state.positions});
    if (on_step && !on_step(step_index, state)) break;
  }

  diag.sim_time = t;
  diag.steps = step_index;
  diag.final_energy = total_energy(state, nat, setup.stiffness);

  // Containment: exact signed distance of every node to the final wall mesh.
  const TriangleMesh* final_mesh =
      setup.sim.release_wall_after_insertion ? full_mesh : setup.cavity_feed;
  double worst = -std::numeric_limits<double>::infinity();
  for (const Vec3& p : state.positions) {
    double d = point_mesh_distance(*final_mesh, p);
    worst = std::max(worst, point_in_mesh(*final_mesh, p) ? -d : d);
  }
  diag.max_containment_violation = worst;
  return result;
}

}  // namespace coilsim
