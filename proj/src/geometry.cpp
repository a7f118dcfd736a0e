#include "coilsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coilsim/octree.hpp"

namespace coilsim {

Lattice cavity_lattice(const TriangleMesh& mesh, int n, double pad) {
  if (mesh.vertices.empty()) throw InvalidConfig("cavity_lattice: empty mesh");
  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const Vec3& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  lo -= Vec3::Constant(pad);
  hi += Vec3::Constant(pad);
  double a = (hi - lo).maxCoeff();  // bounding cube edge
  Lattice lat;
  lat.origin = 0.5 * (lo + hi) - Vec3::Constant(0.5 * a);
  lat.spacing = a / n;
  lat.dims = {n, n, n};
  return lat;
}

namespace {

// Nearest-triangle distance with branch-and-bound over an octree of
// centroids; bound_slack is the largest triangle bounding radius.
class NearestTriangle {
 public:
  explicit NearestTriangle(const TriangleMesh& mesh) : mesh_(mesh) {
    tree_.build(mesh.centroids);
    slack_ = mesh.max_bound_radius();
  }

  double distance(const Vec3& p, double upper_hint) const {
    // Grow the query radius until a triangle is inside it; the hint from the
    // neighboring cell keeps the growth loop short.
    double r = std::max(upper_hint, slack_ * 2.0);
    std::vector<int>& hits = scratch_;
    for (int iter = 0; iter < 64; ++iter) {
      tree_.query(p, r + slack_, hits);
      double best = std::numeric_limits<double>::infinity();
      for (int k : hits) {
        double d = point_triangle_distance(p, mesh_.vertices[mesh_.triangles[k][0]],
                                           mesh_.vertices[mesh_.triangles[k][1]],
                                           mesh_.vertices[mesh_.triangles[k][2]]);
        best = std::min(best, d);
      }
      if (best <= r) return best;
      r *= 2.0;
    }
    throw Error("NearestTriangle: search failed to converge");
  }

 private:
  const TriangleMesh& mesh_;
  Octree tree_;
  double slack_ = 0;
  mutable std::vector<int> scratch_;
};

// Crossing parameters of the +x ray through (x0, y, z) with the mesh.
// Returns false if any hit is too marginal to trust.
bool column_crossings(const TriangleMesh& mesh, const Vec3& origin, std::vector<double>& ts) {
  ts.clear();
  const Vec3 dir(1, 0, 0);
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pv = dir.cross(e2);
    double det = e1.dot(pv);
    double scale = e1.norm() * e2.norm();
    if (std::abs(det) < 1e-9 * scale) {
      // Parallel facet: a hazard only when the ray runs inside the facet's
      // plane and passes near the facet itself.
      Vec3 cen = (a + b + c) / 3.0;
      double r_tri = std::max({(a - cen).norm(), (b - cen).norm(), (c - cen).norm()});
      Vec3 rel = cen - origin;
      double off = std::hypot(rel.y(), rel.z());
      double plane_dist = std::abs((origin - a).dot(e1.cross(e2).normalized()));
      if (off < 2.0 * r_tri && plane_dist < 1e-4 * r_tri) return false;
      continue;
    }
    double inv = 1.0 / det;
    Vec3 tv = origin - a;
    double u = tv.dot(pv) * inv;
    if (u < -1e-10 || u > 1 + 1e-10) continue;
    Vec3 qv = tv.cross(e1);
    double v = dir.dot(qv) * inv;
    if (v < -1e-10 || u + v > 1 + 1e-10) continue;
    if (u < 1e-9 || v < 1e-9 || u + v > 1 - 1e-9) return false;
    ts.push_back(e2.dot(qv) * inv);
  }
  std::sort(ts.begin(), ts.end());
  return (ts.size() % 2) == 0;  // a closed mesh is crossed an even number of times
}

}  // namespace

SignedDistanceGrid build_sdf(const TriangleMesh& mesh, const Lattice& lattice) {
  MeshValidation v = validate_mesh(mesh);
  if (!v.watertight || !v.oriented) throw NotWatertight("build_sdf: mesh is not watertight");

  SignedDistanceGrid grid;
  grid.lattice = lattice;
  grid.values.assign(lattice.size(), 0.0);

  NearestTriangle nearest(mesh);
  const auto [nx, ny, nz] = lattice.dims;

  // Unsigned distances, sweeping x-fastest so the previous cell's distance
  // seeds the search radius.
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      double hint = 0.0;
      for (int i = 0; i < nx; ++i) {
        double d = nearest.distance(lattice.cell_center(i, j, k), hint + lattice.spacing);
        grid.values[lattice.index(i, j, k)] = d;
        hint = d;
      }
    }
  }

  // Sign per (j,k) column by ray parity; jitter the column on marginal hits.
  std::vector<double> ts;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      Vec3 base = lattice.cell_center(0, j, k);
      base.x() = lattice.origin.x() - lattice.spacing;
      bool ok = false;
      for (int attempt = 0; attempt < 16 && !ok; ++attempt) {
        Vec3 origin = base;
        if (attempt > 0) {
          origin.y() += lattice.spacing * 7.3e-4 * attempt;
          origin.z() += lattice.spacing * 4.1e-4 * attempt * attempt;
        }
        ok = column_crossings(mesh, origin, ts);
      }
      if (!ok) throw Error("build_sdf: unresolved ray parity in a lattice column");
      size_t next = 0;
      bool inside = false;
      for (int i = 0; i < nx; ++i) {
        double x_rel = lattice.cell_center(i, j, k).x() - base.x();
        while (next < ts.size() && ts[next] < x_rel) {
          inside = !inside;
          ++next;
        }
        if (inside) grid.values[lattice.index(i, j, k)] *= -1.0;
      }
    }
  }
  return grid;
}

double equal_volume_level(const SignedDistanceGrid& sdf, const std::vector<uint8_t>& cavity_mask,
                          double volume_fraction) {
  if (cavity_mask.size() != sdf.values.size())
    throw LatticeMismatch("equal_volume_level: mask size mismatch");
  std::vector<size_t> cells;
  for (size_t i = 0; i < cavity_mask.size(); ++i)
    if (cavity_mask[i]) cells.push_back(i);
  if (cells.empty()) throw Error("equal_volume_level: empty cavity mask");

  std::sort(cells.begin(), cells.end(), [&](size_t a, size_t b) {
    if (sdf.values[a] != sdf.values[b]) return sdf.values[a] < sdf.values[b];
    return a < b;
  });
  size_t target = static_cast<size_t>(std::llround(volume_fraction * cells.size()));
  target = std::clamp<size_t>(target, 1, cells.size());
  return sdf.values[cells[target - 1]];
}

NeckSphere neck_sphere(const TriangleMesh& mesh, const Vec3& plane_point, const Vec3& plane_normal,
                       std::optional<Vec3> center_override, std::optional<double> radius_override) {
  NeckSphere out;
  if (center_override && radius_override) {
    out.center = *center_override;
    out.radius = *radius_override;
    return out;
  }
  double nn = plane_normal.norm();
  if (!(nn > 0)) throw NeckNotDefined("neck_sphere: zero plane normal");
  Vec3 n = plane_normal / nn;

  // Intersection points of mesh edges with the plane form the neck contour.
  std::vector<Vec3> pts;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const Vec3& a = mesh.vertices[t[e]];
      const Vec3& b = mesh.vertices[t[(e + 1) % 3]];
      double da = (a - plane_point).dot(n);
      double db = (b - plane_point).dot(n);
      if ((da <= 0 && db > 0) || (da > 0 && db <= 0)) {
        double w = da / (da - db);
        pts.push_back(a + w * (b - a));
      }
    }
  }
  if (pts.size() < 3) throw NeckNotDefined("neck_sphere: plane does not cut the mesh");

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());

  double max_chord = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      max_chord = std::max(max_chord, (pts[i] - pts[j]).norm());

  out.center = center_override.value_or(centroid);
  out.radius = radius_override.value_or(0.5 * max_chord);
  return out;
}

double RegionPartition::cavity_volume() const {
  return lattice.cell_volume() * std::accumulate(cavity.begin(), cavity.end(), 0.0);
}
double RegionPartition::core_volume() const {
  return lattice.cell_volume() * std::accumulate(core.begin(), core.end(), 0.0);
}
double RegionPartition::boundary_volume() const {
  return lattice.cell_volume() * std::accumulate(boundary.begin(), boundary.end(), 0.0);
}
double RegionPartition::sphere_volume() const {
  return lattice.cell_volume() * std::accumulate(sphere.begin(), sphere.end(), 0.0);
}

RegionPartition build_partition(const SignedDistanceGrid& sdf, const NeckSphere& neck) {
  RegionPartition part;
  part.lattice = sdf.lattice;
  part.neck = neck;
  size_t n = sdf.values.size();
  part.cavity.assign(n, 0);
  part.core.assign(n, 0);
  part.boundary.assign(n, 0);
  part.sphere.assign(n, 0);

  std::vector<size_t> cells;
  for (size_t i = 0; i < n; ++i)
    if (sdf.values[i] < 0) {
      part.cavity[i] = 1;
      cells.push_back(i);
    }
  if (cells.empty()) throw Error("build_partition: no cells inside the cavity");

  part.level = equal_volume_level(sdf, part.cavity, 0.5);

  // Deeper-inside half is the core; ties on the level value are assigned in
  // cell order until the target count is reached.
  std::sort(cells.begin(), cells.end(), [&](size_t a, size_t b) {
    if (sdf.values[a] != sdf.values[b]) return sdf.values[a] < sdf.values[b];
    return a < b;
  });
  size_t half = cells.size() / 2 + (cells.size() % 2);
  for (size_t r = 0; r < cells.size(); ++r) {
    if (r < half)
      part.core[cells[r]] = 1;
    else
      part.boundary[cells[r]] = 1;
  }

  if (neck.radius > 0) {
    const auto [nx, ny, nz] = part.lattice.dims;
    double r2 = neck.radius * neck.radius;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          size_t idx = part.lattice.index(i, j, k);
          if (!part.cavity[idx]) continue;  // sphere volume clipped to the cavity
          if ((part.lattice.cell_center(i, j, k) - neck.center).squaredNorm() <= r2)
            part.sphere[idx] = 1;
        }
  }
  return part;
}

}  // namespace coilsim
