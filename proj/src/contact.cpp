#include "coilsim/contact.hpp"

#include <algorithm>
#include <climits>
#include <cmath>

namespace coilsim {

void ContactParams::validate() const {
  if (k_sc < 0 || k_w < 0 || gamma_sc < 0 || gamma_w < 0)
    throw InvalidConfig("ContactParams: stiffness/dissipation must be >= 0");
  if (!(mu_slip_cc >= 0 && mu_slip_cc <= 2 && mu_slip_cw >= 0 && mu_stick_cw <= 2 &&
        mu_slip_cw <= mu_stick_cw))
    throw InvalidConfig("ContactParams: need 0 <= mu_slip <= mu_stick <= 2");
  if (!(v_eps > 0)) throw InvalidConfig("ContactParams: v_eps must be positive");
}

SegmentClosest segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                        const Vec3& q2) {
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  if (!(a > 0) || !(e > 0)) throw DegenerateSegment("segment_segment_distance: zero-length segment");

  double c = d1.dot(r), b = d1.dot(d2);
  double denom = a * e - b * b;

  // Clamped minimization of the quadratic |p1 + s d1 - p2 - t d2|^2.
  double s = denom > 1e-14 * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  double t = (b * s + f) / e;
  if (t < 0) {
    t = 0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1) {
    t = 1;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }

  SegmentClosest out;
  out.s = s;
  out.t = t;
  out.delta = (p2 + t * d2) - (p1 + s * d1);
  return out;
}

namespace detail_bp {

void broad_phase_self_into(const RodState& state, const Octree& tree, double lbar, double D2,
                           std::vector<int>& hits, std::vector<std::pair<int, int>>& pairs,
                           int edge_limit = -1) {
  const int ne = edge_limit < 0 ? state.num_edges() : std::min(state.num_edges(), edge_limit);
  // t2 must be the same expression the brute force uses, so candidate sets
  // agree bitwise at exact-threshold pairs.
  double t2 = 0.25 * lbar * lbar + D2 * D2;
  // Query slightly wide; the exact filter below decides the boundary.
  double thresh = std::sqrt(t2) * (1.0 + 1e-12);
  pairs.clear();
  for (int i = 0; i < ne; ++i) {
    Vec3 ci = 0.5 * (state.positions[i] + state.positions[i + 1]);
    tree.query(ci, thresh, hits);
    std::sort(hits.begin(), hits.end());  // per-edge sort keeps pairs globally ordered
    for (int j : hits) {
      if (j - i < 2) continue;  // unordered pairs, adjacent edges excluded
      Vec3 cj = 0.5 * (state.positions[j] + state.positions[j + 1]);
      if ((cj - ci).squaredNorm() <= t2) pairs.emplace_back(i, j);
    }
  }
}

void broad_phase_wall_into(const RodState& state, const TriangleMesh& mesh, const Octree& tri_tree,
                           double D2, double margin, std::vector<int>& hits,
                           std::vector<std::pair<int, int>>& pairs, int edge_limit = -1) {
  const int ne = edge_limit < 0 ? state.num_edges() : std::min(state.num_edges(), edge_limit);
  double r_max = mesh.max_bound_radius();
  pairs.clear();
  for (int i = 0; i < ne; ++i) {
    Vec3 ci = 0.5 * (state.positions[i] + state.positions[i + 1]);
    tri_tree.query(ci, (0.5 * D2 + r_max + margin) * (1.0 + 1e-12), hits);
    std::sort(hits.begin(), hits.end());
    for (int k : hits) {
      double thresh = 0.5 * D2 + mesh.bound_radius[k] + margin;
      if ((mesh.centroids[k] - ci).squaredNorm() <= thresh * thresh) pairs.emplace_back(i, k);
    }
  }
}

}  // namespace detail_bp

std::vector<std::pair<int, int>> broad_phase_self(const RodState& state, const Octree& tree,
                                                  double lbar, double D2) {
  std::vector<int> hits;
  std::vector<std::pair<int, int>> pairs;
  detail_bp::broad_phase_self_into(state, tree, lbar, D2, hits, pairs);
  return pairs;
}

std::vector<std::pair<int, int>> broad_phase_self_brute(const RodState& state, double lbar,
                                                        double D2) {
  const int ne = state.num_edges();
  double t2 = 0.25 * lbar * lbar + D2 * D2;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < ne; ++i) {
    Vec3 ci = 0.5 * (state.positions[i] + state.positions[i + 1]);
    for (int j = i + 2; j < ne; ++j) {
      Vec3 cj = 0.5 * (state.positions[j] + state.positions[j + 1]);
      if ((cj - ci).squaredNorm() <= t2) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

std::vector<std::pair<int, int>> broad_phase_wall(const RodState& state, const TriangleMesh& mesh,
                                                  const Octree& tri_tree, double D2, double margin) {
  std::vector<int> hits;
  std::vector<std::pair<int, int>> pairs;
  detail_bp::broad_phase_wall_into(state, mesh, tri_tree, D2, margin, hits, pairs);
  return pairs;
}

std::vector<std::pair<int, int>> broad_phase_wall_brute(const RodState& state,
                                                        const TriangleMesh& mesh, double D2,
                                                        double margin) {
  const int ne = state.num_edges();
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < ne; ++i) {
    Vec3 ci = 0.5 * (state.positions[i] + state.positions[i + 1]);
    for (int k = 0; k < mesh.num_triangles(); ++k) {
      double thresh = 0.5 * D2 + mesh.bound_radius[k] + margin;
      if ((mesh.centroids[k] - ci).squaredNorm() <= thresh * thresh) pairs.emplace_back(i, k);
    }
  }
  return pairs;
}

std::optional<PointTriangleContact> edge_triangle_contact(const Vec3& point,
                                                          const TriangleMesh& mesh, int tri,
                                                          double radius) {
  const Vec3& a = mesh.vertices[mesh.triangles[tri][0]];
  const Vec3& b = mesh.vertices[mesh.triangles[tri][1]];
  const Vec3& c = mesh.vertices[mesh.triangles[tri][2]];
  const Vec3& n = mesh.normals[tri];

  double dist = (point - a).dot(n);  // signed, along outward normal
  if (std::abs(dist) > radius) return std::nullopt;

  // Inside test for the in-plane projection (closed condition).
  Vec3 proj = point - dist * n;
  Vec3 v0 = b - a, v1 = c - a, v2 = proj - a;
  double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  double d20 = v2.dot(v0), d21 = v2.dot(v1);
  double denom = d00 * d11 - d01 * d01;
  if (denom <= 0) throw DegenerateTriangle("edge_triangle_contact: degenerate triangle");
  double v = (d11 * d20 - d01 * d21) / denom;
  double w = (d00 * d21 - d01 * d20) / denom;
  if (v < 0 || w < 0 || v + w > 1) return std::nullopt;

  PointTriangleContact out;
  out.penetration = radius - std::abs(dist);
  out.signed_distance = dist;
  out.normal = n;
  return out;
}

CoilCoilForce coil_coil_force(const RodState& state, int edge_i, int edge_j,
                              const SegmentClosest& cp, double D2, const ContactParams& p) {
  CoilCoilForce out;
  out.on_i0 = out.on_i1 = out.on_j0 = out.on_j1 = Vec3::Zero();

  double dist = cp.delta.norm();
  double eps = D2 - dist;
  if (eps < 0 || dist <= 0) return out;  // Heaviside gate

  Vec3 dhat = cp.delta / dist;  // from edge i's closest point toward edge j's

  // Contact point velocities by linear interpolation of the nodal velocities.
  Vec3 vi = (1.0 - cp.s) * state.velocities[edge_i] + cp.s * state.velocities[edge_i + 1];
  Vec3 vj = (1.0 - cp.t) * state.velocities[edge_j] + cp.t * state.velocities[edge_j + 1];
  Vec3 vrel = vi - vj;

  Vec3 f_normal = -(p.k_sc * eps + p.gamma_sc * vrel.dot(dhat)) * dhat;
  out.normal_magnitude = f_normal.norm();

  Vec3 f_fric = Vec3::Zero();
  Vec3 v_par = vrel - vrel.dot(dhat) * dhat;
  double v_par_norm = v_par.norm();
  // Slip friction only; below v_eps the direction is ill-defined, so zero.
  if (v_par_norm >= p.v_eps)
    f_fric = -p.mu_slip_cc * out.normal_magnitude * (v_par / v_par_norm);

  Vec3 f_i = f_normal + f_fric;
  out.on_i0 = (1.0 - cp.s) * f_i;
  out.on_i1 = cp.s * f_i;
  out.on_j0 = -(1.0 - cp.t) * f_i;
  out.on_j1 = -cp.t * f_i;
  return out;
}

Vec3 coil_wall_force(const Vec3& normal, double penetration, const Vec3& velocity,
                     const Vec3& f_internal, const ContactParams& p) {
  if (penetration < 0) return Vec3::Zero();

  // Support reaction cannot be adhesive: only the wall-directed part of the
  // internal load enters.
  double f_perp = std::max(0.0, f_internal.dot(normal));
  Vec3 f = -(f_perp + p.k_w * penetration + p.gamma_w * velocity.dot(normal)) * normal;

  Vec3 v_par = velocity - velocity.dot(normal) * normal;
  Vec3 f_par = f_internal - f_internal.dot(normal) * normal;
  double v_norm = v_par.norm();
  if (v_norm <= p.v_eps) {
    double f_norm = f_par.norm();
    if (f_norm > 0)
      f += -std::min(f_norm, p.mu_stick_cw * f_perp) * (f_par / f_norm);
  } else {
    f += -p.mu_slip_cw * f_perp * (v_par / v_norm);
  }
  return f;
}

TriangleMesh catheter_mesh(const std::array<Vec3, 3>& spline_nodes, double radius,
                           int circ_segments, int axial_segments) {
  if ((spline_nodes[0] - spline_nodes[1]).norm() == 0 ||
      (spline_nodes[1] - spline_nodes[2]).norm() == 0 ||
      (spline_nodes[0] - spline_nodes[2]).norm() == 0)
    throw DegenerateSpline("catheter_mesh: control points must be distinct");
  if (!(radius > 0) || circ_segments < 3 || axial_segments < 1)
    throw InvalidConfig("catheter_mesh: bad tessellation parameters");

  auto point_at = [&](double s) {
    double u = 1.0 - s;
    return u * u * spline_nodes[0] + 2.0 * u * s * spline_nodes[1] + s * s * spline_nodes[2];
  };
  auto tangent_at = [&](double s) {
    Vec3 d = 2.0 * (1.0 - s) * (spline_nodes[1] - spline_nodes[0]) +
             2.0 * s * (spline_nodes[2] - spline_nodes[1]);
    double n = d.norm();
    if (n == 0) throw DegenerateSpline("catheter_mesh: vanishing spline tangent");
    return Vec3(d / n);
  };

  // Twist-free ring frames via parallel transport along the spline.
  TriangleMesh mesh;
  std::vector<int> ring(circ_segments);
  std::vector<int> prev_ring(circ_segments);
  Vec3 t_prev = tangent_at(0.0);
  Vec3 u = Vec3::UnitX() - Vec3::UnitX().dot(t_prev) * t_prev;
  if (u.norm() < 1e-9) u = Vec3::UnitY() - Vec3::UnitY().dot(t_prev) * t_prev;
  u.normalize();

  for (int i = 0; i <= axial_segments; ++i) {
    double s = static_cast<double>(i) / axial_segments;
    Vec3 t = tangent_at(s);
    Vec3 axis = t_prev.cross(t);
    double dot = t_prev.dot(t);
    if (axis.norm() > 0 && dot > -1 + 1e-9) {
      Vec3 kv = axis.cross(u);
      u = u + kv + axis.cross(kv) / (1.0 + dot);
    }
    u -= u.dot(t) * t;
    u.normalize();
    Vec3 v = t.cross(u);
    t_prev = t;

    Vec3 center = point_at(s);
    for (int k = 0; k < circ_segments; ++k) {
      double a = 2.0 * M_PI * k / circ_segments;
      mesh.vertices.push_back(center + radius * (std::cos(a) * u + std::sin(a) * v));
      ring[k] = static_cast<int>(mesh.vertices.size()) - 1;
    }
    if (i > 0) {
      for (int k = 0; k < circ_segments; ++k) {
        int k1 = (k + 1 == circ_segments) ? 0 : k + 1;
        // Wound so normals point away from the axis.
        mesh.triangles.push_back({prev_ring[k], prev_ring[k1], ring[k1]});
        mesh.triangles.push_back({prev_ring[k], ring[k1], ring[k]});
      }
    }
    prev_ring = ring;
  }
  mesh.compute_derived();
  return mesh;
}

void accumulate_contact_forces(const RodState& state, double lbar, double D2,
                               const ContactParams& params,
                               const std::vector<Vec3>& internal_forces,
                               const std::vector<WallMeshRef>& walls, Octree& edge_tree,
                               ContactAccumulator& acc, const std::vector<uint8_t>* shielded,
                               int active_edges) {
  const int n = state.num_nodes();
  const int ne = state.num_edges();
  acc.forces.assign(n, Vec3::Zero());
  acc.max_wall_penetration = 0.0;
  acc.num_coil_coil = 0;
  acc.num_coil_wall = 0;

  // Coil-coil: broad phase over edge centers, narrow phase on segment
  // distance; pairs arrive sorted so accumulation is order-deterministic.
  acc.centers.resize(ne);
  for (int i = 0; i < ne; ++i) acc.centers[i] = 0.5 * (state.positions[i] + state.positions[i + 1]);
  edge_tree.build(acc.centers);
  detail_bp::broad_phase_self_into(state, edge_tree, lbar, D2, acc.hits, acc.pairs, active_edges);
  auto is_shielded = [&](int node) { return shielded && (*shielded)[node] != 0; };
  for (auto [i, j] : acc.pairs) {
    if (is_shielded(i) || is_shielded(i + 1) || is_shielded(j) || is_shielded(j + 1)) continue;
    SegmentClosest cp = segment_segment_distance(state.positions[i], state.positions[i + 1],
                                                 state.positions[j], state.positions[j + 1]);
    if (cp.distance() > D2) continue;
    CoilCoilForce f = coil_coil_force(state, i, j, cp, D2, params);
    acc.forces[i] += f.on_i0;
    acc.forces[i + 1] += f.on_i1;
    acc.forces[j] += f.on_j0;
    acc.forces[j + 1] += f.on_j1;
    ++acc.num_coil_coil;
  }

  // Coil-wall: candidates per edge, contact test and force attachment per
  // node. The query margin covers the node-to-edge-center offset.
  double cur_max_edge = 0.0;
  for (int i = 0; i < ne; ++i)
    cur_max_edge = std::max(cur_max_edge, (state.positions[i + 1] - state.positions[i]).norm());

  for (const WallMeshRef& wall : walls) {
    if (!wall.mesh || wall.mesh->num_triangles() == 0) continue;
    detail_bp::broad_phase_wall_into(state, *wall.mesh, *wall.tree, D2, 0.5 * cur_max_edge,
                                     acc.hits, acc.pairs, active_edges);
    // (edge, tri) pairs are sorted; the node streams {(i,k)} and {(i+1,k)}
    // are each sorted too, so a linear merge with dedup gives the node
    // contacts in deterministic order.
    {
      size_t np = acc.pairs.size();
      std::vector<std::pair<int, int>>& nt = acc.node_tri;
      nt.clear();
      size_t a = 0, b = 0;
      while (a < np || b < np) {
        std::pair<int, int> pa = a < np ? acc.pairs[a] : std::pair<int, int>{INT_MAX, INT_MAX};
        std::pair<int, int> pb = b < np ? std::pair<int, int>{acc.pairs[b].first + 1, acc.pairs[b].second}
                                        : std::pair<int, int>{INT_MAX, INT_MAX};
        std::pair<int, int> take = std::min(pa, pb);
        if (pa <= pb) ++a;
        if (pb <= pa) ++b;
        if (nt.empty() || nt.back() != take) nt.push_back(take);
      }
    }
    for (auto [i, k] : acc.node_tri) {
      if (is_shielded(i)) continue;
      auto contact = edge_triangle_contact(state.positions[i], *wall.mesh, k, 0.5 * D2);
      if (!contact) continue;
      // The wall formula is written for a node on the interior side; on a
      // two-sided obstacle contacts from the outer face flip the normal.
      Vec3 n = contact->normal;
      if (wall.two_sided && contact->signed_distance >= 0) n = -n;
      acc.forces[i] +=
          coil_wall_force(n, contact->penetration, state.velocities[i], internal_forces[i], params);
      if (!wall.two_sided) {
        // Rod-surface depth past the wall; exceeds D2/2 iff the node center
        // crossed the wall plane.
        acc.max_wall_penetration =
            std::max(acc.max_wall_penetration, contact->signed_distance + 0.5 * D2);
      }
      ++acc.num_coil_wall;
    }
  }
}

}  // namespace coilsim
