#include "coilsim/octree.hpp"

#include <algorithm>
#include <cmath>

namespace coilsim {

void Octree::build(std::span<const Vec3> points) {
  nodes_.clear();
  items_.resize(points.size());
  points_.assign(points.begin(), points.end());
  for (size_t i = 0; i < points.size(); ++i) items_[i] = static_cast<int>(i);
  if (points.empty()) return;

  Vec3 lo = points[0], hi = points[0];
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // Root is a cube so children stay cubical.
  Vec3 c = 0.5 * (lo + hi);
  double half = 0.5 * (hi - lo).maxCoeff();
  half = std::max(half, 1e-300) * (1.0 + 1e-12);
  Node root;
  root.lo = c - Vec3::Constant(half);
  root.hi = c + Vec3::Constant(half);
  root.begin = 0;
  root.end = static_cast<int>(items_.size());
  nodes_.push_back(root);
  subdivide(0, 0);
}

void Octree::subdivide(int node, int depth) {
  Node& n = nodes_[node];
  if (n.end - n.begin <= leaf_capacity_ || depth >= max_depth_) return;

  Vec3 c = 0.5 * (n.lo + n.hi);
  // Stable counting sort of the item range into the 8 octants; stability
  // keeps the traversal (and every candidate list) deterministic.
  int begin = n.begin, end = n.end;
  int counts[8] = {};
  scratch_.resize(end - begin);
  for (int i = begin; i < end; ++i) {
    const Vec3& p = points_[items_[i]];
    int o = (p.x() >= c.x() ? 1 : 0) | (p.y() >= c.y() ? 2 : 0) | (p.z() >= c.z() ? 4 : 0);
    counts[o]++;
  }
  int offsets[8] = {};
  for (int o = 1; o < 8; ++o) offsets[o] = offsets[o - 1] + counts[o - 1];
  for (int i = begin; i < end; ++i) {
    const Vec3& p = points_[items_[i]];
    int o = (p.x() >= c.x() ? 1 : 0) | (p.y() >= c.y() ? 2 : 0) | (p.z() >= c.z() ? 4 : 0);
    scratch_[offsets[o]++] = items_[i];
  }
  std::copy(scratch_.begin(), scratch_.end(), items_.begin() + begin);

  int first_child = static_cast<int>(nodes_.size());
  nodes_[node].first_child = first_child;
  int offset = begin;
  for (int o = 0; o < 8; ++o) {
    Node child;
    child.lo = Vec3(o & 1 ? c.x() : nodes_[node].lo.x(), o & 2 ? c.y() : nodes_[node].lo.y(),
                    o & 4 ? c.z() : nodes_[node].lo.z());
    child.hi = Vec3(o & 1 ? nodes_[node].hi.x() : c.x(), o & 2 ? nodes_[node].hi.y() : c.y(),
                    o & 4 ? nodes_[node].hi.z() : c.z());
    child.begin = offset;
    child.end = offset + counts[o];
    offset = child.end;
    nodes_.push_back(child);
  }
  for (int o = 0; o < 8; ++o) {
    int child = first_child + o;
    if (nodes_[child].end - nodes_[child].begin > 0) subdivide(child, depth + 1);
  }
}

void Octree::query(const Vec3& center, double radius, std::vector<int>& out) const {
  out.clear();
  if (nodes_.empty()) return;
  double r2 = radius * radius;
  // Box pruning gets a hair of slack so the leaf-level test (identical to
  // the brute-force arithmetic) is the only decider near the threshold.
  double prune2 = r2 * (1.0 + 1e-9) + 1e-300;

  // Iterative DFS, fixed child order -> deterministic output order.
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      double v = center[k];
      double d = std::max({n.lo[k] - v, 0.0, v - n.hi[k]});
      d2 += d * d;
    }
    if (d2 > prune2) continue;
    if (n.first_child < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        int idx = items_[i];
        ++distance_evals;
        if ((points_[idx] - center).squaredNorm() <= r2) out.push_back(idx);
      }
    } else {
      for (int o = 7; o >= 0; --o) {
        const Node& ch = nodes_[n.first_child + o];
        if (ch.end > ch.begin) stack[top++] = n.first_child + o;
      }
    }
  }
}

}  // namespace coilsim
