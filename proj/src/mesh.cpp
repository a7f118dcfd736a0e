#include "coilsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace coilsim {

void TriangleMesh::compute_derived() {
  const int m = num_triangles();
  normals.resize(m);
  centroids.resize(m);
  bound_radius.resize(m);
  for (int k = 0; k < m; ++k) {
    Vec3 a = vertex_of(k, 0), b = vertex_of(k, 1), c = vertex_of(k, 2);
    Vec3 n = (b - a).cross(c - a);
    double area2 = n.norm();
    if (area2 <= 0.0) throw DegenerateTriangle("mesh has a zero-area triangle");
    normals[k] = n / area2;
    centroids[k] = (a + b + c) / 3.0;
    bound_radius[k] = std::sqrt(std::max({(a - centroids[k]).squaredNorm(),
                                          (b - centroids[k]).squaredNorm(),
                                          (c - centroids[k]).squaredNorm()}));
  }
}

double TriangleMesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e)
      m = std::max(m, (vertices[t[e]] - vertices[t[(e + 1) % 3]]).norm());
  return m;
}

double TriangleMesh::max_bound_radius() const {
  double m = 0.0;
  for (double r : bound_radius) m = std::max(m, r);
  return m;
}

void TriangleMesh::translate(const Vec3& offset) {
  for (Vec3& v : vertices) v += offset;
  if (!centroids.empty()) compute_derived();
}

MeshValidation validate_mesh(const TriangleMesh& mesh) {
  MeshValidation out;
  // Edge -> (count, winding balance). A consistently wound closed surface
  // has every undirected edge twice, once per direction.
  std::map<std::pair<int, int>, std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      auto key = std::minmax(a, b);
      auto& rec = edges[{key.first, key.second}];
      rec.first += 1;
      rec.second += (a < b) ? 1 : -1;
    }
  }
  bool closed = true, oriented = true;
  for (const auto& [key, rec] : edges) {
    if (rec.first != 2) {
      closed = false;
      if (rec.first < 2)
        out.boundary_edges += 1;
      else
        out.nonmanifold_edges += 1;
    } else if (rec.second != 0) {
      oriented = false;
    }
  }
  out.watertight = closed;
  out.oriented = closed && oriented;
  out.max_edge_length = mesh.max_edge_length();
  double vol = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    vol += a.dot(b.cross(c)) / 6.0;
  }
  out.signed_volume = vol;
  return out;
}

double mesh_volume(const TriangleMesh& mesh) {
  MeshValidation v = validate_mesh(mesh);
  if (!v.watertight || !v.oriented)
    throw NotWatertight("mesh_volume: mesh is not closed and consistently oriented");
  return v.signed_volume;
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection, closest point on triangle.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - a).norm();
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - b).norm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + (d1 / (d1 - d3)) * ab)).norm();
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - c).norm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + (d2 / (d2 - d6)) * ac)).norm();
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return (p - (b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b))).norm();
  double denom = 1.0 / (va + vb + vc);
  Vec3 closest = a + (vb * denom) * ab + (vc * denom) * ac;
  return (p - closest).norm();
}

double point_mesh_distance(const TriangleMesh& mesh, const Vec3& point) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles)
    best = std::min(best, point_triangle_distance(point, mesh.vertices[t[0]],
                                                  mesh.vertices[t[1]], mesh.vertices[t[2]]));
  return best;
}

namespace {

// Moeller-Trumbore; returns t or NaN, flags hits too close to an edge or to
// the ray origin plane for the parity count to be trusted.
double ray_triangle(const Vec3& orig, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c,
                    bool& marginal) {
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 pv = dir.cross(e2);
  double det = e1.dot(pv);
  double scale = e1.norm() * e2.norm();
  if (std::abs(det) < 1e-9 * scale) {
    // Near-parallel: a hazard only when the ray runs inside the facet's
    // plane and passes near the facet, ahead of the origin.
    Vec3 cen = (a + b + c) / 3.0;
    double r_tri = std::max({(a - cen).norm(), (b - cen).norm(), (c - cen).norm()});
    Vec3 rel = cen - orig;
    double along = rel.dot(dir);
    double off = (rel - along * dir).norm();
    double plane_dist = std::abs((orig - a).dot(e1.cross(e2).normalized()));
    if (off < 3.0 * r_tri && along > -3.0 * r_tri && plane_dist < 1e-4 * r_tri) marginal = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
  double inv = 1.0 / det;
  Vec3 tv = orig - a;
  double u = tv.dot(pv) * inv;
  if (u < -1e-10 || u > 1.0 + 1e-10) return std::numeric_limits<double>::quiet_NaN();
  Vec3 qv = tv.cross(e1);
  double v = dir.dot(qv) * inv;
  if (v < -1e-10 || u + v > 1.0 + 1e-10) return std::numeric_limits<double>::quiet_NaN();
  double t = e2.dot(qv) * inv;
  if (t <= 0) return std::numeric_limits<double>::quiet_NaN();
  if (u < 1e-9 || v < 1e-9 || u + v > 1.0 - 1e-9 || t < 1e-12) marginal = true;
  return t;
}

}  // namespace

bool point_in_mesh(const TriangleMesh& mesh, const Vec3& point) {
  // Deterministic jitter schedule; re-cast whenever a crossing is marginal.
  Vec3 dir(1.0, 0.0, 0.0);
  for (int attempt = 0; attempt < 8; ++attempt) {
    bool marginal = false;
    int crossings = 0;
    for (const auto& t : mesh.triangles) {
      double hit = ray_triangle(point, dir, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                mesh.vertices[t[2]], marginal);
      if (!std::isnan(hit)) ++crossings;
      if (marginal) break;
    }
    if (!marginal) return (crossings % 2) == 1;
    dir = Vec3(1.0, 2.154e-4 * (attempt + 1), 1.571e-4 * (attempt + 1) * (attempt + 1)).normalized();
  }
  throw Error("point_in_mesh: parity test unresolved after retries");
}

std::string ingestion_report(const TriangleMesh& mesh, double D2) {
  MeshValidation v = validate_mesh(mesh);
  std::ostringstream os;
  os << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles"
     << "; watertight=" << (v.watertight ? "yes" : "no")
     << "; oriented=" << (v.oriented ? "yes" : "no");
  if (!v.watertight) os << " (" << v.boundary_edges << " boundary edges)";
  os << "; volume=" << v.signed_volume << " m^3";
  if (v.signed_volume < 0) os << " [WARNING: inward orientation]";
  os << "; max edge=" << v.max_edge_length << " m";
  if (D2 > 0 && v.max_edge_length > 2.0 * D2)
    os << " [WARNING: exceeds 2*D2=" << 2.0 * D2
       << "; node-vs-triangle contact may miss hits near facet borders]";
  return os.str();
}

// --- ingestion ----------------------------------------------------------

namespace {

struct VertexKey {
  uint64_t x, y, z;
  bool operator<(const VertexKey& o) const {
    return std::tie(x, y, z) < std::tie(o.x, o.y, o.z);
  }
};

VertexKey key_of(const Vec3& v) {
  VertexKey k;
  static_assert(sizeof(double) == sizeof(uint64_t));
  std::memcpy(&k.x, &v.x(), 8);
  std::memcpy(&k.y, &v.y(), 8);
  std::memcpy(&k.z, &v.z(), 8);
  return k;
}

class MeshBuilder {
 public:
  int add_vertex(const Vec3& v) {
    auto [it, inserted] = index_.try_emplace(key_of(v), static_cast<int>(mesh_.vertices.size()));
    if (inserted) mesh_.vertices.push_back(v);
    return it->second;
  }
  void add_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
    mesh_.triangles.push_back({add_vertex(a), add_vertex(b), add_vertex(c)});
  }
  TriangleMesh take() {
    mesh_.compute_derived();
    return std::move(mesh_);
  }

 private:
  TriangleMesh mesh_;
  std::map<VertexKey, int> index_;
};

TriangleMesh load_stl_binary(std::ifstream& in) {
  in.seekg(80);
  uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  MeshBuilder mb;
  for (uint32_t i = 0; i < count; ++i) {
    float buf[12];
    in.read(reinterpret_cast<char*>(buf), 48);
    char attr[2];
    in.read(attr, 2);
    if (!in) throw Error("binary STL truncated");
    Vec3 a(buf[3], buf[4], buf[5]), b(buf[6], buf[7], buf[8]), c(buf[9], buf[10], buf[11]);
    mb.add_triangle(a, b, c);
  }
  return mb.take();
}

TriangleMesh load_stl_ascii(std::ifstream& in) {
  MeshBuilder mb;
  std::string tok;
  std::vector<Vec3> tri;
  while (in >> tok) {
    if (tok == "vertex") {
      Vec3 v;
      in >> v.x() >> v.y() >> v.z();
      tri.push_back(v);
      if (tri.size() == 3) {
        mb.add_triangle(tri[0], tri[1], tri[2]);
        tri.clear();
      }
    }
  }
  return mb.take();
}

TriangleMesh load_obj(std::ifstream& in) {
  std::vector<Vec3> verts;
  TriangleMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string f;
      while (ls >> f) {
        // "i", "i/j", "i/j/k" forms; indices are 1-based
        idx.push_back(std::stoi(f.substr(0, f.find('/'))) - 1);
      }
      for (size_t i = 2; i < idx.size(); ++i)
        mesh.triangles.push_back({idx[0], idx[i - 1], idx[i]});
    }
  }
  mesh.vertices = std::move(verts);
  mesh.compute_derived();
  return mesh;
}

}  // namespace

TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("cannot open mesh file: " + path);
  auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == "obj") return load_obj(in);
  if (ext != "stl") throw InvalidConfig("unsupported mesh format: " + path);

  // STL: binary unless the file starts with "solid" and parses as text.
  char head[6] = {};
  in.read(head, 5);
  in.seekg(0);
  if (std::strncmp(head, "solid", 5) == 0) {
    TriangleMesh m = load_stl_ascii(in);
    if (!m.triangles.empty()) return m;
    in.clear();
    in.seekg(0);
  }
  return load_stl_binary(in);
}

void save_stl(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  char header[80] = {};
  std::snprintf(header, sizeof(header), "coilsim mesh");
  out.write(header, 80);
  uint32_t count = static_cast<uint32_t>(mesh.triangles.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& t : mesh.triangles) {
    Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
    Vec3 n = (b - a).cross(c - a).normalized();
    float buf[12] = {static_cast<float>(n.x()), static_cast<float>(n.y()), static_cast<float>(n.z()),
                     static_cast<float>(a.x()), static_cast<float>(a.y()), static_cast<float>(a.z()),
                     static_cast<float>(b.x()), static_cast<float>(b.y()), static_cast<float>(b.z()),
                     static_cast<float>(c.x()), static_cast<float>(c.y()), static_cast<float>(c.z())};
    out.write(reinterpret_cast<const char*>(buf), 48);
    char attr[2] = {};
    out.write(attr, 2);
  }
}

// --- synthetic fixtures ---------------------------------------------------

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find({key.first, key.second});
      if (it != midpoint.end()) return it->second;
      Vec3 m = (verts[a] + verts[b]).normalized();
      verts.push_back(m);
      int idx = static_cast<int>(verts.size()) - 1;
      midpoint[{key.first, key.second}] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriangleMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const Vec3& v : verts) mesh.vertices.push_back(center + radius * v);
  mesh.triangles = std::move(faces);
  mesh.compute_derived();
  return mesh;
}

TriangleMesh make_icosphere_with_neck(double radius, double neck_radius, double neck_length,
                                      int subdivisions) {
  if (!(neck_radius > 0) || neck_radius >= radius)
    throw InvalidConfig("make_icosphere_with_neck: need 0 < neck_radius < radius");
  TriangleMesh ico = make_icosphere(radius, subdivisions);

  double theta_neck = std::asin(neck_radius / radius);
  double z_neck = radius * std::cos(theta_neck);
  double z_top = z_neck + neck_length;

  // Drop triangles fully inside the neck cone around +z.
  auto polar = [&](const Vec3& v) { return std::acos(std::clamp(v.z() / v.norm(), -1.0, 1.0)); };
  std::vector<std::array<int, 3>> kept;
  for (const auto& t : ico.triangles) {
    bool inside = polar(ico.vertices[t[0]]) < theta_neck && polar(ico.vertices[t[1]]) < theta_neck &&
                  polar(ico.vertices[t[2]]) < theta_neck;
    if (!inside) kept.push_back(t);
  }
  if (kept.size() == ico.triangles.size())
    throw InvalidConfig("make_icosphere_with_neck: neck too small for this subdivision");

  // Boundary loop of the hole: edges used once, chained into a cycle.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : kept)
    for (int e = 0; e < 3; ++e) {
      auto mm = std::minmax(t[e], t[(e + 1) % 3]);
      edge_count[{mm.first, mm.second}] += 1;
    }
  std::map<int, std::vector<int>> next;
  for (const auto& [edge, count] : edge_count)
    if (count == 1) {
      next[edge.first].push_back(edge.second);
      next[edge.second].push_back(edge.first);
    }
  if (next.empty()) throw Error("make_icosphere_with_neck: no hole boundary found");
  std::vector<int> loop;
  int start = next.begin()->first;
  int prev = -1, cur = start;
  do {
    loop.push_back(cur);
    const auto& nb = next[cur];
    if (nb.size() != 2) throw Error("make_icosphere_with_neck: non-manifold hole boundary");
    int nxt = (nb[0] == prev) ? nb[1] : nb[0];
    prev = cur;
    cur = nxt;
  } while (cur != start && loop.size() <= next.size());
  if (cur != start) throw Error("make_icosphere_with_neck: hole boundary is not a single loop");

  // Orient the loop counter-clockwise viewed from +z, with unwrapped
  // azimuths for the merge walk.
  auto azimuth = [](const Vec3& v) { return std::atan2(v.y(), v.x()); };
  auto unwrap = [&](const std::vector<int>& lp) {
    std::vector<double> out(lp.size());
    for (size_t i = 0; i < lp.size(); ++i) {
      double a = azimuth(ico.vertices[lp[i]]);
      if (i == 0) {
        out[i] = a;
      } else {
        double d = a - out[i - 1];
        while (d > M_PI) d -= 2 * M_PI;
        while (d < -M_PI) d += 2 * M_PI;
        out[i] = out[i - 1] + d;
      }
    }
    return out;
  };
  std::vector<double> az = unwrap(loop);
  if (az.back() - az.front() < 0) {
    std::reverse(loop.begin(), loop.end());
    az = unwrap(loop);
  }

  MeshBuilder mb;
  for (const auto& t : kept)
    mb.add_triangle(ico.vertices[t[0]], ico.vertices[t[1]], ico.vertices[t[2]]);

  // Tube rings (ring 0 at z_neck) and cap rings, as in the revolution mesh.
  int n_phi = std::max<int>(12, static_cast<int>(loop.size()));
  double ring_edge = 2 * M_PI * neck_radius / n_phi;
  int n_tube = std::max(1, static_cast<int>(std::ceil(neck_length / ring_edge)));
  int n_cap = std::max(1, static_cast<int>(std::ceil(neck_radius / ring_edge)));
  struct Ring {
    double r, z;
  };
  std::vector<Ring> rings;
  for (int i = 0; i <= n_tube; ++i) rings.push_back({neck_radius, z_neck + neck_length * i / n_tube});
  for (int i = 1; i < n_cap; ++i)
    rings.push_back({neck_radius * (1.0 - static_cast<double>(i) / n_cap), z_top});
  auto ring_point = [&](int ring, int k) {
    double a = 2.0 * M_PI * k / n_phi;
    return Vec3(rings[ring].r * std::cos(a), rings[ring].r * std::sin(a), rings[ring].z);
  };
  for (size_t i = 0; i + 1 < rings.size(); ++i)
    for (int k = 0; k < n_phi; ++k) {
      int k1 = (k + 1 == n_phi) ? 0 : k + 1;
      mb.add_triangle(ring_point(static_cast<int>(i), k), ring_point(static_cast<int>(i), k1),
                      ring_point(static_cast<int>(i + 1), k1));
      mb.add_triangle(ring_point(static_cast<int>(i), k), ring_point(static_cast<int>(i + 1), k1),
                      ring_point(static_cast<int>(i + 1), k));
    }
  Vec3 top(0, 0, z_top);
  int last = static_cast<int>(rings.size()) - 1;
  for (int k = 0; k < n_phi; ++k)
    mb.add_triangle(top, ring_point(last, k), ring_point(last, k + 1 == n_phi ? 0 : k + 1));

  // Zip band: azimuth merge between the hole loop (lower) and tube ring 0
  // (upper). Both walked CCW from the same starting azimuth.
  int m = static_cast<int>(loop.size());
  auto loop_vertex = [&](int i) { return ico.vertices[loop[i % m]]; };
  auto loop_az = [&](int i) { return az[i % m] + 2 * M_PI * (i / m); };
  // ring 0 walked starting at the ring index nearest az[0]
  double ring_step = 2 * M_PI / n_phi;
  int ring_start = static_cast<int>(std::floor(az[0] / ring_step));
  auto ring_az = [&](int j) { return (ring_start + j) * ring_step; };
  auto ring_vertex = [&](int j) {
    int k = ((ring_start + j) % n_phi + n_phi) % n_phi;
    return ring_point(0, k);
  };

  int i = 0, j = 0;
  while (i < m || j < n_phi) {
    bool advance_lower;
    if (i >= m)
      advance_lower = false;
    else if (j >= n_phi)
      advance_lower = true;
    else
      advance_lower = loop_az(i + 1) <= ring_az(j + 1);
    if (advance_lower) {
      mb.add_triangle(loop_vertex(i), loop_vertex(i + 1), ring_vertex(j));
      ++i;
    } else {
      mb.add_triangle(loop_vertex(i), ring_vertex(j + 1), ring_vertex(j));
      ++j;
    }
  }

  TriangleMesh mesh = mb.take();
  MeshValidation v = validate_mesh(mesh);
  if (!v.watertight || !v.oriented || v.signed_volume <= 0)
    throw Error("make_icosphere_with_neck: stitched mesh failed validation");
  return mesh;
}

TriangleMesh make_sphere_with_neck(double radius, double neck_radius, double neck_length,
                                   double target_edge) {
  if (!(neck_radius > 0) || neck_radius >= radius)
    throw InvalidConfig("make_sphere_with_neck: need 0 < neck_radius < radius");

  // Surface of revolution about +z: spherical profile from the neck opening
  // angle down to the south pole, then the neck tube, then a flat cap.
  double theta_neck = std::asin(neck_radius / radius);
  double z_neck = radius * std::cos(theta_neck);
  double z_top = z_neck + neck_length;

  int n_phi = std::max(12, static_cast<int>(std::ceil(2.0 * M_PI * radius / target_edge)));
  int n_sphere = std::max(4, static_cast<int>(std::ceil(radius * (M_PI - theta_neck) / target_edge)));
  int n_tube = std::max(1, static_cast<int>(std::ceil(neck_length / target_edge)));
  int n_cap = std::max(1, static_cast<int>(std::ceil(neck_radius / target_edge)));

  // Profile rings from south pole upward: (r(theta), z(theta)) for the
  // sphere, constant radius along the tube, then shrinking rings on the cap.
  struct Ring {
    double r, z;
  };
  std::vector<Ring> rings;
  for (int i = 0; i <= n_sphere; ++i) {
    double th = M_PI - (M_PI - theta_neck) * i / n_sphere;  // pi -> theta_neck
    rings.push_back({radius * std::sin(th), radius * std::cos(th)});
  }
  for (int i = 1; i <= n_tube; ++i)
    rings.push_back({neck_radius, z_neck + neck_length * i / n_tube});
  for (int i = 1; i < n_cap; ++i)
    rings.push_back({neck_radius * (1.0 - static_cast<double>(i) / n_cap), z_top});

  MeshBuilder mb;
  auto point = [&](int ring, int k) {
    double a = 2.0 * M_PI * k / n_phi;
    return Vec3(rings[ring].r * std::cos(a), rings[ring].r * std::sin(a), rings[ring].z);
  };

  // South pole fan (ring 0 is the pole, radius ~0).
  Vec3 south(0, 0, -radius);
  for (int k = 0; k < n_phi; ++k)
    mb.add_triangle(south, point(1, k + 1 == n_phi ? 0 : k + 1), point(1, k));

  // Bands between consecutive rings, wound so normals point outward.
  for (size_t i = 1; i + 1 < rings.size(); ++i) {
    for (int k = 0; k < n_phi; ++k) {
      int k1 = (k + 1 == n_phi) ? 0 : k + 1;
      Vec3 a = point(static_cast<int>(i), k), b = point(static_cast<int>(i), k1);
      Vec3 c = point(static_cast<int>(i + 1), k), d = point(static_cast<int>(i + 1), k1);
      mb.add_triangle(a, b, d);
      mb.add_triangle(a, d, c);
    }
  }

  // Cap fan to the axis point at z_top.
  Vec3 top(0, 0, z_top);
  int last = static_cast<int>(rings.size()) - 1;
  for (int k = 0; k < n_phi; ++k)
    mb.add_triangle(top, point(last, k), point(last, k + 1 == n_phi ? 0 : k + 1));

  return mb.take();
}

}  // namespace coilsim
