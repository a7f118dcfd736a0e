#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "coilsim/mesh.hpp"
#include "coilsim/types.hpp"

namespace coilsim {

// Regular cell lattice over a cube; values live at cell centers.
struct Lattice {
  Vec3 origin = Vec3::Zero();
  double spacing = 0.0;
  std::array<int, 3> dims = {0, 0, 0};

  size_t size() const {
    return static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) *
           static_cast<size_t>(dims[2]);
  }
  size_t index(int i, int j, int k) const {
    return static_cast<size_t>(i) +
           static_cast<size_t>(dims[0]) * (static_cast<size_t>(j) + static_cast<size_t>(dims[1]) * k);
  }
  Vec3 cell_center(int i, int j, int k) const {
    return origin + spacing * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  double cell_volume() const { return spacing * spacing * spacing; }
  bool same_as(const Lattice& o) const {
    return dims == o.dims && spacing == o.spacing && (origin - o.origin).norm() == 0.0;
  }
};

// Bounding-cube lattice of the cavity mesh, n cells per axis, padded by one
// rod diameter so near-wall coil voxels stay in range. Shared by the SDF and
// by coil voxelization so masks align cell-for-cell.
Lattice cavity_lattice(const TriangleMesh& mesh, int n = 70, double pad = 0.0);

struct SignedDistanceGrid {
  Lattice lattice;
  std::vector<double> values;  // negative inside
};

// Exact unsigned distance per cell center (octree-accelerated), sign by
// ray-parity per lattice column. Throws NotWatertight for open meshes.
SignedDistanceGrid build_sdf(const TriangleMesh& mesh, const Lattice& lattice);

// Level c* such that cells with value <= c* hold half the cavity volume
// (ties split by cell order so the partition is always balanced to one cell).
double equal_volume_level(const SignedDistanceGrid& sdf, const std::vector<uint8_t>& cavity_mask,
                          double volume_fraction = 0.5);

struct NeckSphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

// Sphere covering the neck region: center at the centroid of the mesh/plane
// intersection contour, radius = half the max chord, unless overridden.
NeckSphere neck_sphere(const TriangleMesh& mesh, const Vec3& plane_point, const Vec3& plane_normal,
                       std::optional<Vec3> center_override = std::nullopt,
                       std::optional<double> radius_override = std::nullopt);

// Core/boundary/neck-sphere cell masks over the cavity.
struct RegionPartition {
  Lattice lattice;
  std::vector<uint8_t> cavity;    // inside the necked-off cavity mesh
  std::vector<uint8_t> core;      // cavity cells with sdf <= level (tie-broken)
  std::vector<uint8_t> boundary;  // cavity \ core
  std::vector<uint8_t> sphere;    // cavity cells inside the neck sphere
  double level = 0.0;
  NeckSphere neck;

  double cavity_volume() const;
  double core_volume() const;
  double boundary_volume() const;
  double sphere_volume() const;  // clipped to the cavity
};

RegionPartition build_partition(const SignedDistanceGrid& sdf, const NeckSphere& neck);

}  // namespace coilsim
