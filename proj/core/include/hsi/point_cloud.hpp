#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "hsi/geometry.hpp"
#include "hsi/image.hpp"

namespace hsi {

/// World-frame points in meters; `colors` is either empty or parallel to `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty() && colors.size() == points.size(); }
};

/// Union of `clouds`. With `voxel > 0`, every occupied voxel cell is replaced
/// by the centroid of its members; output is ordered by voxel index. Colors
/// survive only if every input carries them.
PointCloud fuse(std::span<const PointCloud> clouds, double voxel);

void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
/// Reads the ASCII PLY vertex element written by `write_ply` (x y z [r g b]).
PointCloud read_ply(const std::filesystem::path& path);

Vec3 centroid(const PointCloud& cloud);

}  // namespace hsi
