#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsi/geometry.hpp"

namespace hsi {

/// Exact nearest-neighbour index over a fixed point set. Ties in squared
/// distance resolve to the lowest point index, matching a brute-force scan.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  struct Hit {
    std::uint32_t index = 0;
    double squared_distance = 0.0;
  };

  /// Precondition: the tree is non-empty.
  Hit nearest(const Vec3& query) const;

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::uint32_t i) const { return points_[i]; }

 private:
  struct Node {
    // Leaf when `axis < 0`; then [begin, end) indexes `order_`.
    int axis = -1;
    double split = 0.0;
    std::uint32_t begin = 0, end = 0;
    std::uint32_t left = 0, right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Vec3& q, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace hsi
