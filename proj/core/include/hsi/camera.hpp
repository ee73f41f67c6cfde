#pragma once

#include <filesystem>

#include "hsi/geometry.hpp"

namespace hsi {

/// Pinhole camera with a world-from-camera pose. Camera frame: +z forward,
/// +x right, +y down.
struct Camera {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  Rigid world_from_camera;
  Vec3 gravity_dir{0.0, 0.0, -1.0};

  /// Throws Input when intrinsics, rotation or gravity violate the invariants.
  void validate() const;

  Vec3 center() const { return world_from_camera.translation; }
};

/// Pixel projection of a world point. Throws BehindCamera for depth <= 0.
Vec2 project(const Vec3& world_point, const Camera& cam);

/// Camera-frame point for pixel (u, v) at depth d.
Vec3 unproject(double u, double v, double depth, const Camera& cam);

/// Camera whose optical axis passes from `eye` through `target`; `up` is a
/// world direction used to fix roll.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
               int width, int height);

Camera read_camera_json(const std::filesystem::path& path);
void write_camera_json(const std::filesystem::path& path, const Camera& cam);

}  // namespace hsi
