#pragma once

#include <filesystem>
#include <string>

#include "hsi/body.hpp"
#include "hsi/contact_graph.hpp"
#include "hsi/scene.hpp"

namespace hsi {

/// Axis-aligned box tagged with the element it belongs to.
struct SceneBox {
  std::string element;
  Vec3 min;
  Vec3 max;
  Rgb color;
};

struct SyntheticScene {
  std::vector<ElementInfo> elements;
  std::vector<SceneBox> boxes;
  std::vector<Camera> cameras;
};

/// Wall ("door") and floor with a vertical bar handle ("door_handle"),
/// 20 cm tall, centered 1 m up and 4.5 cm off the wall. `mirrored`
/// reflects everything through x = 0.
SyntheticScene reach_scene(bool mirrored);

/// Ray casts every camera; depth is quantized to millimeters so the
/// in-memory bundle equals what `save_bundle` + `load_bundle` return.
SceneBundle render_bundle(const SyntheticScene& scene);

inline constexpr const char* kReachTask = "open the door";

/// Fixture graph: `hand`_palm on the handle, both feet on the floor.
ContactGraph reach_graph(const std::string& hand);

/// Standing rest pose facing the wall, placed so the handle lies on the
/// body's right (used by the mirrored scene).
BodyPose reach_offset_pose(const Skeleton& skel, bool mirrored);

/// Writes the bundle plus `fixtures.json`, `task.txt` and, for the mirrored
/// scene, `init_pose.json` with a left-handed fixture graph.
void write_reach_scene(const std::filesystem::path& dir, bool mirrored, const Skeleton& skel);

}  // namespace hsi
