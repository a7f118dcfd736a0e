#pragma once

#include <span>
#include <vector>

#include "coilsim/types.hpp"

namespace coilsim {

// Point octree for broad-phase candidate queries. Leaves hold item indices;
// query(center, radius) returns exactly the stored points within radius
// (pruning is conservative, the leaf test is the same arithmetic the brute
// force uses). Rebuild per step via build(), node storage is reused.
class Octree {
 public:
  explicit Octree(int leaf_capacity = 16, int max_depth = 12)
      : leaf_capacity_(leaf_capacity), max_depth_(max_depth) {}

  void build(std::span<const Vec3> points);

  void query(const Vec3& center, double radius, std::vector<int>& out) const;

  // Number of point-distance evaluations performed since the last reset;
  // used by the complexity sanity benchmark.
  mutable long long distance_evals = 0;

 private:
  struct Node {
    Vec3 lo, hi;
    int first_child = -1;             // index of 8 consecutive children, -1 for leaf
    int begin = 0, end = 0;           // item range in items_ (leaves only)
  };

  void subdivide(int node, int depth);

  int leaf_capacity_;
  int max_depth_;
  std::vector<Node> nodes_;
  std::vector<int> items_;
  std::vector<Vec3> points_;
  std::vector<int> scratch_;
};

}  // namespace coilsim
