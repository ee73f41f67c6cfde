#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "hsi/geometry.hpp"
#include "hsi/point_cloud.hpp"
#include "hsi/skeleton.hpp"

namespace hsi {

/// Body parameters. Root rotation is rot_z(phi.z) * exp([phi.x, phi.y, 0]):
/// phi.z is the gravity-axis (yaw) component, phi.x / phi.y tilt the body.
struct BodyPose {
  std::vector<double> beta;     // per-joint relative segment length change; scale = 1 + beta
  Vec3 r = Vec3::Zero();        // root translation, meters
  Vec3 phi = Vec3::Zero();      // root orientation
  std::vector<Vec3> theta_b;    // axis-angle, joints 1..21
  std::vector<Vec3> theta_h;    // axis-angle, 15 finger joints per hand

  /// Rest pose (zero shape, zero rotations) sized for `skel`.
  static BodyPose rest(const Skeleton& skel);

  /// Local rotation of `joint` (identity for the root).
  const Vec3& joint_rotation(int joint) const;
  Vec3& joint_rotation(int joint);

  /// Throws Input on dimension mismatch, non-finite values, or a joint
  /// rotation angle above pi.
  void validate(const Skeleton& skel) const;

  bool operator==(const BodyPose&) const = default;
};

Mat3 root_rotation(const Vec3& phi);

/// Shape-resolved, pose-independent geometry: everything attached to a joint
/// frame expressed in that frame.
struct LocalGeometry {
  struct Capsule {
    int joint = 0;
    Vec3 a, b;  // local endpoints
    double radius = 0.0;
  };
  struct Sample {
    int joint = 0;
    Vec3 local;
  };

  std::vector<Vec3> offsets;                  // beta-scaled rest offsets
  std::vector<Capsule> capsules;              // one per bone
  std::vector<std::vector<Sample>> samples;   // per part, anchor order
};

LocalGeometry resolve_geometry(const Skeleton& skel, const std::vector<double>& beta);

struct WorldCapsule {
  Vec3 a, b;
  double radius = 0.0;
};

struct PosedBody {
  std::vector<Rigid> joint_world;
  std::vector<WorldCapsule> capsules_world;
  std::vector<std::vector<Vec3>> surface_samples;  // per part

  Vec3 joint_position(int j) const { return joint_world[j].translation; }
};

PosedBody forward_kinematics(const Skeleton& skel, const BodyPose& pose);
PosedBody forward_kinematics(const Skeleton& skel, const LocalGeometry& geom, const BodyPose& pose);

/// Union-of-capsules signed distance: negative inside.
double sdf(const Vec3& p, const PosedBody& posed);

struct SdfQuery {
  double value = 0.0;
  int capsule = -1;  // lowest index on ties
  double t = 0.0;    // axial parameter of the closest segment point
};
SdfQuery sdf_query(const Vec3& p, const PosedBody& posed);

/// Samples of `part`. With `contact_zone` on a foot, only the toe and heel
/// samples are returned. Throws Vocabulary for unknown parts.
std::vector<Vec3> part_samples(const Skeleton& skel, const PosedBody& posed, std::string_view part,
                               bool contact_zone = false);

/// Anchor indices of `part` that belong to its contact zone (all anchors for
/// non-foot parts).
std::vector<std::size_t> contact_zone_indices(const Skeleton& skel, int part);

BodyPose load_pose(const std::filesystem::path& path, const Skeleton& skel);
void save_pose(const std::filesystem::path& path, const BodyPose& pose);

/// Capsules tessellated into a triangle mesh.
void write_body_obj(const std::filesystem::path& path, const PosedBody& posed, int segments = 12);
PointCloud samples_cloud(const PosedBody& posed);

}  // namespace hsi
