#include "coilsim/shapes.hpp"

#include <cmath>

#include "coilsim/rng.hpp"

namespace coilsim {

void CoilSpec::validate() const {
  if (!(D1 > 0 && D2 > 0 && D3 > 0)) throw InvalidConfig("CoilSpec: diameters must be positive");
  if (!(D1 < D2 && D2 < D3)) throw InvalidConfig("CoilSpec: expected D1 < D2 < D3");
  if (!(pitch_factor > 1.0)) throw InvalidConfig("CoilSpec: pitch factor must exceed 1");
  if (!(length >= 0 && E_w > 0 && rho > 0)) throw InvalidConfig("CoilSpec: non-positive parameter");
}

Stiffness spring_constants(const CoilSpec& spec, double stretch_alpha) {
  spec.validate();
  double d1_4 = spec.D1 * spec.D1 * spec.D1 * spec.D1;
  double common = spec.E_w * d1_4 * spec.pitch();
  Stiffness k;
  k.stretch = stretch_alpha;
  k.bend = common / (32.0 * (2.0 + spec.mu_w) * spec.D2);
  k.twist = common / (64.0 * spec.D2);
  return k;
}

double node_mass(const CoilSpec& spec, double edge_length) {
  double wire_area = M_PI * spec.D1 * spec.D1 / 4.0;
  double wound_length = edge_length * M_PI * spec.D2 / spec.pitch();
  return spec.rho * wire_area * wound_length;
}

namespace {

int edge_count(double length, double edge_length) {
  return std::max(1, static_cast<int>(std::llround(length / edge_length)));
}

}  // namespace

std::vector<Vec3> make_straight(double length, double edge_length) {
  if (!(length > 0) || !(edge_length > 0) || edge_length > length)
    throw InvalidConfig("make_straight: need 0 < edge_length <= length");
  int ne = edge_count(length, edge_length);
  std::vector<Vec3> pts(ne + 1);
  for (int i = 0; i <= ne; ++i) pts[i] = Vec3(i * edge_length, 0, 0);
  return pts;
}

std::vector<Vec3> make_helix(double D3, double helix_pitch, double length, double edge_length) {
  if (!(D3 > 0) || !(length > 0) || !(edge_length > 0))
    throw InvalidConfig("make_helix: non-positive parameter");
  double r = D3 / 2.0;
  double c = helix_pitch / (2.0 * M_PI);  // axial advance per radian
  double speed = std::sqrt(r * r + c * c);
  double dtheta = edge_length / speed;  // arclength step -> parameter step
  int ne = edge_count(length, edge_length);
  std::vector<Vec3> pts(ne + 1);
  for (int i = 0; i <= ne; ++i) {
    double th = i * dtheta;
    pts[i] = Vec3(r * std::cos(th), r * std::sin(th), c * th);
  }
  return pts;
}

double polygon_curvature(double turning_angle) { return 2.0 * std::tan(turning_angle / 2.0); }

namespace {

// One generation pass for the 3D frame shape. All loop vertices are kept
// within `bound` of the origin so the final cloud fits the containment
// contract even after re-centering on its own centroid.
std::vector<Vec3> generate_frame_shape(double D3, int num_edges, double chord, uint64_t seed,
                                       double bound) {
  constexpr double golden = 2.399963229728653;  // golden angle [rad]
  const double r_hi = 0.5 * D3;
  const double r_floor = 0.26 * D3;

  Rng rng(Rng::derive(seed, 0x3d5));

  // Start on a loop centered at the origin.
  double r0 = r_hi * rng.uniform(0.8, 1.0);
  Vec3 p(r0, 0.0, 0.0);
  Vec3 t = Vec3::UnitY();

  std::vector<Vec3> pts;
  pts.reserve(num_edges + 1);
  pts.push_back(p);

  int loop_index = 0;
  while (static_cast<int>(pts.size()) < num_edges + 1) {
    double r = r_hi * rng.uniform(0.8, 1.0);
    double frac = rng.uniform(0.7, 1.3);
    double jitter = 0.08 * std::sin((loop_index + 1) * golden);

    // In-plane direction from p toward the loop center; steering at the
    // origin keeps loops concentric, shrink retries pull the worst vertex in.
    Vec3 w, q;
    for (int retry = 0; retry < 6; ++retry) {
      Vec3 d = -p;  // toward origin
      w = d - d.dot(t) * t;
      if (w.norm() < 1e-9 * D3) w = perpendicular_unit(t);
      w.normalize();
      if (retry == 0) {
        Vec3 n = t.cross(w);
        w = std::cos(jitter) * w + std::sin(jitter) * n;
      }
      q = p + r * w;
      double swing = std::sqrt(q.dot(w) * q.dot(w) + q.dot(t) * q.dot(t));
      double worst = std::sqrt(q.squaredNorm() + r * r + 2.0 * r * swing);
      if (worst <= bound) break;
      r = std::max(0.85 * r, r_floor);
    }

    double half = std::asin(std::min(1.0, chord / (2.0 * r)));
    double dtheta = 2.0 * half;
    int m_full = std::max(3, static_cast<int>(2.0 * M_PI / dtheta));
    int m = std::max(3, static_cast<int>(std::llround(m_full * frac)));

    for (int j = 1; j <= m && static_cast<int>(pts.size()) < num_edges + 1; ++j) {
      double th = j * dtheta;
      pts.push_back(q - r * std::cos(th) * w + r * std::sin(th) * t);
    }
    size_t sz = pts.size();
    t = (pts[sz - 1] - pts[sz - 2]).normalized();
    p = pts[sz - 1];
    ++loop_index;
  }
  return pts;
}

}  // namespace

std::vector<Vec3> make_3d_frame_shape(double D3, double length, double edge_length, uint64_t seed) {
  if (!(D3 > 0) || !(length > 0) || !(edge_length > 0))
    throw InvalidConfig("make_3d_frame_shape: non-positive parameter");
  if (edge_length > 0.26 * D3)
    throw InvalidConfig("make_3d_frame_shape: edge length too coarse for the imprint diameter");
  const int ne = edge_count(length, edge_length);

  // Tighten the internal bound until the cloud fits a 1.05*D3 ball around
  // its own centroid; the first pass succeeds for all sane parameters.
  double bound = 0.47 * D3;
  for (int attempt = 0; attempt < 6; ++attempt, bound *= 0.92) {
    std::vector<Vec3> pts = generate_frame_shape(D3, ne, edge_length, seed, bound);
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& x : pts) centroid += x;
    centroid /= static_cast<double>(pts.size());
    double worst = 0.0;
    for (const Vec3& x : pts) worst = std::max(worst, (x - centroid).norm());
    if (worst <= 0.98 * 0.525 * D3) return pts;
  }
  throw Error("make_3d_frame_shape: failed to satisfy containment bound");
}

}  // namespace coilsim
