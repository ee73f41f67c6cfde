#include <doctest.h>

#include <random>

#include "hsi/kdtree.hpp"

using namespace hsi;

TEST_CASE("kd-tree nearest neighbour equals a linear scan, ties to the lowest index") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {1, 2, 7, 64, 1000}) {
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), u(rng)});
    // exact duplicates and grid-aligned points to force ties
    if (n > 10) {
      pts[5] = pts[3];
      pts[9] = Vec3(0.5, 0.5, 0.5);
      pts[n - 1] = Vec3(0.5, 0.5, 0.5);
    }
    const KdTree tree(pts);
    CHECK(tree.size() == static_cast<std::size_t>(n));
    for (int q = 0; q < 300; ++q) {
      const Vec3 query = q % 10 == 0 && n > 10 ? pts[q % n] : Vec3(1.5 * u(rng), 1.5 * u(rng), 1.5 * u(rng));
      std::uint32_t best = 0;
      double bd = (pts[0] - query).squaredNorm();
      for (int i = 1; i < n; ++i) {
        const double d = (pts[i] - query).squaredNorm();
        if (d < bd) {
          bd = d;
          best = static_cast<std::uint32_t>(i);
        }
      }
      const KdTree::Hit hit = tree.nearest(query);
      CHECK(hit.index == best);
      CHECK(hit.squared_distance == bd);
    }
  }
  CHECK(KdTree().empty());
}
