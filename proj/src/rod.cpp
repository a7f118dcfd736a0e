#include "coilsim/rod.hpp"

#include <cmath>
#include <sstream>

namespace coilsim {

namespace {

constexpr double kAntiParallelEps = 1e-9;

void check_not_antiparallel(double dot, const char* where) {
  if (dot <= -1.0 + kAntiParallelEps) {
    std::ostringstream os;
    os << where << ": tangents anti-parallel (dot = " << dot
       << "); the rod has kinked within one edge turn";
    throw AntiParallelTangents(os.str());
  }
}

}  // namespace

double NaturalShape::min_edge_length() const {
  double m = rest_edge_lengths.empty() ? 0.0 : rest_edge_lengths[0];
  for (double l : rest_edge_lengths) m = std::min(m, l);
  return m;
}

double NaturalShape::total_length() const {
  double s = 0.0;
  for (double l : rest_edge_lengths) s += l;
  return s;
}

void RodState::validate() const {
  const int n = num_nodes();
  if (n < 2) throw SizeMismatch("RodState: need at least 2 nodes");
  if (static_cast<int>(velocities.size()) != n)
    throw SizeMismatch("RodState: velocities size != positions size");
  if (static_cast<int>(twist_angles.size()) != n - 1)
    throw SizeMismatch("RodState: twist_angles size != N-1");
  if (static_cast<int>(ref_frames.size()) != n - 1)
    throw SizeMismatch("RodState: ref_frames size != N-1");
  for (int j = 0; j < n - 1; ++j) {
    Vec3 e = edge(j);
    double len = e.norm();
    if (len <= 0.0) throw DegenerateCenterline("RodState: zero-length edge");
    const Director& f = ref_frames[j];
    double tol = 1e-12;
    if (std::abs(f.d1.norm() - 1.0) > tol || std::abs(f.d2.norm() - 1.0) > tol ||
        std::abs(f.d3.norm() - 1.0) > tol || std::abs(f.d1.dot(f.d2)) > tol ||
        std::abs(f.d1.dot(f.d3)) > tol || std::abs(f.d2.dot(f.d3)) > tol)
      throw Error("RodState: reference frame not orthonormal");
    if ((f.d1.cross(f.d2) - f.d3).norm() > tol)
      throw Error("RodState: reference frame not right-handed");
    if ((f.d3 - e / len).norm() > tol)
      throw Error("RodState: reference frame not adapted to edge tangent");
  }
}

Mat3 parallel_transport(const Vec3& t_from, const Vec3& t_to) {
  double c = t_from.dot(t_to);
  check_not_antiparallel(c, "parallel_transport");
  Vec3 axis = t_from.cross(t_to);
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return Mat3::Identity() + k + k * k / (1.0 + c);
}

Vec3 parallel_transport_vec(const Vec3& v, const Vec3& t_from, const Vec3& t_to) {
  double c = t_from.dot(t_to);
  check_not_antiparallel(c, "parallel_transport");
  Vec3 axis = t_from.cross(t_to);
  Vec3 kv = axis.cross(v);
  return v + kv + axis.cross(kv) / (1.0 + c);
}

Vec3 curvature_binormal(const Vec3& t_prev, const Vec3& t_next) {
  double c = t_prev.dot(t_next);
  check_not_antiparallel(c, "curvature_binormal");
  return 2.0 * t_prev.cross(t_next) / (1.0 + c);
}

Vec3 perpendicular_unit(const Vec3& t) {
  // start from the coordinate axis least aligned with t
  Vec3 a = Vec3::UnitX();
  double ax = std::abs(t.x()), ay = std::abs(t.y()), az = std::abs(t.z());
  if (ay <= ax && ay <= az)
    a = Vec3::UnitY();
  else if (az <= ax && az <= ay)
    a = Vec3::UnitZ();
  Vec3 p = a - a.dot(t) * t;
  return p.normalized();
}

std::vector<Director> material_frames(const RodState& state) {
  std::vector<Director> out(state.ref_frames.size());
  for (size_t j = 0; j < state.ref_frames.size(); ++j) {
    const Director& f = state.ref_frames[j];
    double cp = std::cos(state.twist_angles[j]);
    double sp = std::sin(state.twist_angles[j]);
    out[j].d1 = cp * f.d1 + sp * f.d2;
    out[j].d2 = -sp * f.d1 + cp * f.d2;
    out[j].d3 = f.d3;
  }
  return out;
}

std::vector<Vec2> nodal_curvatures(const RodState& state) {
  const int n = state.num_nodes();
  std::vector<Director> mat = material_frames(state);
  std::vector<Vec2> out(std::max(0, n - 2));
  for (int i = 1; i <= n - 2; ++i) {
    Vec3 t_prev = state.edge(i - 1).normalized();
    Vec3 t_next = state.edge(i).normalized();
    Vec3 kb = curvature_binormal(t_prev, t_next);
    out[i - 1].x() = 0.5 * (mat[i - 1].d2 + mat[i].d2).dot(kb);
    out[i - 1].y() = -0.5 * (mat[i - 1].d1 + mat[i].d1).dot(kb);
  }
  return out;
}

std::vector<double> edge_twists(const RodState& state) {
  const int n = state.num_nodes();
  std::vector<double> out(std::max(0, n - 2));
  for (int j = 1; j <= n - 2; ++j) out[j - 1] = state.twist_angles[j] - state.twist_angles[j - 1];
  return out;
}

std::vector<double> reference_frame_twists(const RodState& state) {
  const int n = state.num_nodes();
  std::vector<double> out(std::max(0, n - 2));
  for (int j = 1; j <= n - 2; ++j) {
    const Director& prev = state.ref_frames[j - 1];
    const Director& cur = state.ref_frames[j];
    Vec3 transported = parallel_transport_vec(prev.d1, prev.d3, cur.d3);
    out[j - 1] = std::atan2(transported.cross(cur.d1).dot(cur.d3), transported.dot(cur.d1));
  }
  return out;
}

RodState update_reference_frames(const RodState& state, const std::vector<Vec3>& new_positions) {
  if (new_positions.size() != state.positions.size())
    throw SizeMismatch("update_reference_frames: position count changed");
  RodState out = state;
  out.positions = new_positions;
  for (int j = 0; j < state.num_edges(); ++j) {
    Vec3 e = new_positions[j + 1] - new_positions[j];
    double len = e.norm();
    if (len <= 0.0) throw DegenerateCenterline("update_reference_frames: collapsed edge");
    Vec3 t_new = e / len;
    Director f = state.ref_frames[j];
    Vec3 d1 = parallel_transport_vec(f.d1, f.d3, t_new);
    // Gram-Schmidt pass keeps the triad orthonormal over long runs.
    d1 -= d1.dot(t_new) * t_new;
    d1.normalize();
    out.ref_frames[j].d3 = t_new;
    out.ref_frames[j].d1 = d1;
    out.ref_frames[j].d2 = t_new.cross(d1);
  }
  return out;
}

namespace {

void check_sizes(const RodState& state, const NaturalShape& nat) {
  const int n = state.num_nodes();
  if (static_cast<int>(nat.rest_edge_lengths.size()) != n - 1 ||
      static_cast<int>(nat.voronoi_lengths.size()) != std::max(0, n - 2) ||
      static_cast<int>(nat.rest_curvatures.size()) != std::max(0, n - 2) ||
      static_cast<int>(nat.rest_twists.size()) != std::max(0, n - 2))
    throw SizeMismatch("rod/natural-shape size mismatch");
}

}  // namespace

double total_energy(const RodState& state, const NaturalShape& nat, const Stiffness& k) {
  check_sizes(state, nat);
  const int n = state.num_nodes();

  double e_stretch = 0.0;
  for (int j = 0; j < n - 1; ++j) {
    double lbar = nat.rest_edge_lengths[j];
    double strain = state.edge(j).norm() / lbar - 1.0;
    e_stretch += 0.5 * k.stretch * strain * strain * lbar;
  }

  double e_bend = 0.0, e_twist = 0.0;
  if (n >= 3) {
    std::vector<Vec2> kappa = nodal_curvatures(state);
    std::vector<double> tau = edge_twists(state);
    for (int i = 1; i <= n - 2; ++i) {
      double li = nat.voronoi_lengths[i - 1];
      Vec2 dk = kappa[i - 1] - nat.rest_curvatures[i - 1];
      e_bend += k.bend * dk.squaredNorm() / (2.0 * li);
      double dt = tau[i - 1] - nat.rest_twists[i - 1];
      e_twist += k.twist * dt * dt / (2.0 * li);
    }
  }
  return e_stretch + e_bend + e_twist;
}

namespace detail {

void internal_forces(const RodState& state, const NaturalShape& nat, const Stiffness& k,
                     RodForceWorkspace& ws, std::vector<Vec3>& forces,
                     std::vector<double>& moments, int active_nodes) {
  check_sizes(state, nat);
  const int n = state.num_nodes();
  const int ne = n - 1;
  const int n_act = (active_nodes < 0 || active_nodes > n) ? n : active_nodes;
  const int ne_act = std::min(ne, n_act);  // edges touching active nodes

  ws.tangents.resize(ne);
  ws.lengths.resize(ne);
  for (int j = 0; j < ne_act; ++j) {
    Vec3 e = state.edge(j);
    ws.lengths[j] = e.norm();
    ws.tangents[j] = e / ws.lengths[j];
  }

  ws.mat_frames.resize(ne);
  for (int j = 0; j < ne_act; ++j) {
    const Director& f = state.ref_frames[j];
    double cp = std::cos(state.twist_angles[j]);
    double sp = std::sin(state.twist_angles[j]);
    ws.mat_frames[j].d1 = cp * f.d1 + sp * f.d2;
    ws.mat_frames[j].d2 = -sp * f.d1 + cp * f.d2;
    ws.mat_frames[j].d3 = f.d3;
  }

  forces.assign(n, Vec3::Zero());
  moments.assign(ne, 0.0);

  // stretch: force -alpha (|e|/lbar - 1) that pulls the edge back to rest
  for (int j = 0; j < ne_act; ++j) {
    double strain = ws.lengths[j] / nat.rest_edge_lengths[j] - 1.0;
    Vec3 f = k.stretch * strain * ws.tangents[j];
    forces[j] += f;
    forces[j + 1] -= f;
  }

  // bending and twist, per interior node i (edges i-1 and i)
  for (int i = 1; i <= std::min(n - 2, n_act - 2); ++i) {
    const Vec3& te = ws.tangents[i - 1];
    const Vec3& tf = ws.tangents[i];
    double chi = 1.0 + te.dot(tf);
    check_not_antiparallel(chi - 1.0, "force_gradient");
    Vec3 kb = 2.0 * te.cross(tf) / chi;

    const Director& me = ws.mat_frames[i - 1];
    const Director& mf = ws.mat_frames[i];
    Vec3 tilde_t = (te + tf) / chi;
    Vec3 tilde_d1 = (me.d1 + mf.d1) / chi;
    Vec3 tilde_d2 = (me.d2 + mf.d2) / chi;

    double kappa1 = 0.5 * (me.d2 + mf.d2).dot(kb);
    double kappa2 = -0.5 * (me.d1 + mf.d1).dot(kb);

    double le = ws.lengths[i - 1];
    double lf = ws.lengths[i];

    Vec3 dk1_de = (-kappa1 * tilde_t + tf.cross(tilde_d2)) / le;
    Vec3 dk1_df = (-kappa1 * tilde_t - te.cross(tilde_d2)) / lf;
    Vec3 dk2_de = (-kappa2 * tilde_t - tf.cross(tilde_d1)) / le;
    Vec3 dk2_df = (-kappa2 * tilde_t + te.cross(tilde_d1)) / lf;

    double li = nat.voronoi_lengths[i - 1];
    double w1 = k.bend * (kappa1 - nat.rest_curvatures[i - 1].x()) / li;
    double w2 = k.bend * (kappa2 - nat.rest_curvatures[i - 1].y()) / li;

    // dE/de and dE/df, mapped to nodes via e = x_i - x_{i-1}, f = x_{i+1} - x_i
    Vec3 grad_e = w1 * dk1_de + w2 * dk2_de;
    Vec3 grad_f = w1 * dk1_df + w2 * dk2_df;
    forces[i - 1] += grad_e;
    forces[i] -= grad_e - grad_f;
    forces[i + 1] -= grad_f;

    // dE_bend/dphi: D2' = -D1, D1' = D2 under rotation about d3
    moments[i - 1] += w1 * (-0.5 * me.d1.dot(kb)) + w2 * (-0.5 * me.d2.dot(kb));
    moments[i] += w1 * (-0.5 * mf.d1.dot(kb)) + w2 * (-0.5 * mf.d2.dot(kb));

    // twist: tau^i = phi^i - phi^{i-1}; no position dependence
    double wt = k.twist * (state.twist_angles[i] - state.twist_angles[i - 1] - nat.rest_twists[i - 1]) / li;
    moments[i] += wt;
    moments[i - 1] -= wt;
  }
}

}  // namespace detail

std::vector<Vec3> force_gradient(const RodState& state, const NaturalShape& nat, const Stiffness& k) {
  detail::RodForceWorkspace ws;
  std::vector<Vec3> forces;
  std::vector<double> moments;
  detail::internal_forces(state, nat, k, ws, forces, moments);
  return forces;
}

std::vector<double> twist_moment_gradient(const RodState& state, const NaturalShape& nat,
                                          const Stiffness& k) {
  detail::RodForceWorkspace ws;
  std::vector<Vec3> forces;
  std::vector<double> moments;
  detail::internal_forces(state, nat, k, ws, forces, moments);
  return moments;
}

std::vector<Director> bishop_frames(const std::vector<Vec3>& centerline,
                                    const std::optional<Vec3>& first_d1) {
  if (centerline.size() < 2) throw DegenerateCenterline("bishop_frames: need at least 2 points");
  const int ne = static_cast<int>(centerline.size()) - 1;
  std::vector<Director> frames(ne);
  for (int j = 0; j < ne; ++j) {
    Vec3 e = centerline[j + 1] - centerline[j];
    double len = e.norm();
    if (len <= 0.0) throw DegenerateCenterline("bishop_frames: repeated point");
    frames[j].d3 = e / len;
  }
  Vec3 d1;
  if (first_d1 && first_d1->norm() > 0.0) {
    d1 = *first_d1 - first_d1->dot(frames[0].d3) * frames[0].d3;
    if (d1.norm() < 1e-12) d1 = perpendicular_unit(frames[0].d3);
    d1.normalize();
  } else {
    d1 = perpendicular_unit(frames[0].d3);
  }
  frames[0].d1 = d1;
  frames[0].d2 = frames[0].d3.cross(d1);
  for (int j = 1; j < ne; ++j) {
    d1 = parallel_transport_vec(frames[j - 1].d1, frames[j - 1].d3, frames[j].d3);
    d1 -= d1.dot(frames[j].d3) * frames[j].d3;
    d1.normalize();
    frames[j].d1 = d1;
    frames[j].d2 = frames[j].d3.cross(d1);
  }
  return frames;
}

RodState make_rod_state(const std::vector<Vec3>& centerline) {
  RodState s;
  s.positions = centerline;
  s.velocities.assign(centerline.size(), Vec3::Zero());
  s.twist_angles.assign(centerline.size() - 1, 0.0);
  s.ref_frames = bishop_frames(centerline);
  return s;
}

NaturalShape build_natural_shape(const std::vector<Vec3>& centerline) {
  if (centerline.size() < 3) throw DegenerateCenterline("build_natural_shape: need at least 3 points");
  const int n = static_cast<int>(centerline.size());

  NaturalShape nat;
  nat.rest_edge_lengths.resize(n - 1);
  for (int j = 0; j < n - 1; ++j) {
    double len = (centerline[j + 1] - centerline[j]).norm();
    if (len <= 0.0) throw DegenerateCenterline("build_natural_shape: repeated point");
    nat.rest_edge_lengths[j] = len;
  }
  nat.voronoi_lengths.resize(n - 2);
  for (int i = 1; i <= n - 2; ++i)
    nat.voronoi_lengths[i - 1] = 0.5 * (nat.rest_edge_lengths[i - 1] + nat.rest_edge_lengths[i]);

  // Measure curvature against the Bishop frame; that framing carries zero twist.
  std::vector<Director> frames = bishop_frames(centerline);
  nat.rest_curvatures.resize(n - 2);
  for (int i = 1; i <= n - 2; ++i) {
    Vec3 kb = curvature_binormal(frames[i - 1].d3, frames[i].d3);
    nat.rest_curvatures[i - 1].x() = 0.5 * (frames[i - 1].d2 + frames[i].d2).dot(kb);
    nat.rest_curvatures[i - 1].y() = -0.5 * (frames[i - 1].d1 + frames[i].d1).dot(kb);
  }
  nat.rest_twists.assign(n - 2, 0.0);
  return nat;
}

}  // namespace coilsim
