#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsi/geometry.hpp"

namespace hsi {

/// Closed body-part vocabulary: 13 coarse parts plus palm and five fingers
/// per hand (25 names). Order is the canonical part order.
std::span<const std::string> part_vocabulary();
bool is_part_name(std::string_view name);

/// left_* <-> right_*; head, back and buttocks map to themselves.
/// Throws Vocabulary for names outside the vocabulary.
std::string mirror_part(std::string_view part);

/// Palm and finger parts of either hand.
bool is_hand_part(std::string_view part);
/// Hand parts plus forearms: the nodes swapped by laterality refinement.
bool is_hand_related_part(std::string_view part);
bool is_left_part(std::string_view part);
bool is_right_part(std::string_view part);
bool is_foot_part(std::string_view part);

struct Joint {
  std::string name;
  int parent = -1;
  Vec3 offset = Vec3::Zero();  // rest offset from the parent joint, meters
  double limit = 3.14159;      // soft bound on the local rotation angle, radians
};

/// Capsule rigidly attached to `joint`'s frame. The segment runs from `start`
/// to the child joint's position, or to `tip` when there is no child.
struct Bone {
  int joint = 0;
  int child = -1;
  Vec3 start = Vec3::Zero();
  Vec3 tip = Vec3::Zero();
  double radius = 0.0;
};

/// Surface sample: position along the bone axis plus a radial direction
/// (unit, perpendicular to the rest axis, in the joint frame).
struct SampleAnchor {
  int bone = 0;
  double axial = 0.0;
  Vec3 radial = Vec3::UnitX();
};

struct BodyPart {
  std::string name;
  std::vector<SampleAnchor> anchors;
};

/// Body frame: +z up, +y forward, +x towards the body's right.
struct Skeleton {
  std::string version;
  std::vector<Joint> joints;
  std::vector<Bone> bones;
  std::vector<BodyPart> parts;  // canonical vocabulary order

  int joint_index(std::string_view name) const;  // throws Input
  int part_index(std::string_view name) const;   // throws Vocabulary
  std::size_t sample_count() const;

  /// Throws Input when topology, radii, anchors or the part table are invalid.
  void validate() const;
};

inline constexpr int kNumBodyJoints = 22;   // pelvis + 21 posed joints
inline constexpr int kNumHandJoints = 15;   // per hand
inline constexpr int kNumJoints = kNumBodyJoints + 2 * kNumHandJoints;

/// Axial fraction bounds of the toe / heel contact zone on foot bones.
inline constexpr double kToeAxial = 0.7;
inline constexpr double kHeelAxial = 0.15;

/// The built-in capsule skeleton (shipped as data/skeleton_v1.json).
Skeleton default_skeleton();

Skeleton load_skeleton(const std::filesystem::path& path);
void save_skeleton(const std::filesystem::path& path, const Skeleton& skel);

/// Shoulder, elbow and wrist joints of both arms.
std::vector<int> arm_joints(const Skeleton& skel);
std::vector<int> ankle_joints(const Skeleton& skel);

}  // namespace hsi
