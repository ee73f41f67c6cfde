#include "hsi/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "hsi/error.hpp"
#include "hsi/reasoner.hpp"
#include "json_util.hpp"

namespace hsi {

namespace {

constexpr double kWallY = 1.0;
constexpr double kHandleX = 0.3;
constexpr double kHandleZ = 1.0;

bool ray_box(const Vec3& o, const Vec3& d, const SceneBox& b, double& t_hit) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (d(i) == 0.0) {
      if (o(i) < b.min(i) || o(i) > b.max(i)) return false;
      continue;
    }
    double a = (b.min(i) - o(i)) / d(i), c = (b.max(i) - o(i)) / d(i);
    if (a > c) std::swap(a, c);
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
    if (t0 > t1) return false;
  }
  t_hit = t0;
  return t0 > 0.0;
}

SceneBox mirror(SceneBox b) {
  const double lo = -b.max.x(), hi = -b.min.x();
  b.min.x() = lo;
  b.max.x() = hi;
  return b;
}

}  // namespace

SyntheticScene reach_scene(bool mirrored) {
  SyntheticScene s;
  s.elements = {{"door", ElementRole::Supporting, "door"},
                {"floor", ElementRole::Supporting, "floor"},
                {"door_handle", ElementRole::Functional, "door handle"}};
  s.boxes = {
      {"door", {-2.5, kWallY, 0.0}, {2.5, kWallY + 0.1, 2.6}, {180, 150, 110}},
      {"floor", {-2.5, -4.0, -0.1}, {2.5, kWallY, 0.0}, {120, 120, 120}},
      {"door_handle", {kHandleX - 0.015, kWallY - 0.075, kHandleZ - 0.1}, {kHandleX + 0.015, kWallY - 0.045, kHandleZ + 0.1},
       {200, 200, 60}},
  };
  const Vec3 up(0.0, 0.0, 1.0);
  // Both views keep the floor in front of the wall in frame.
  const Vec3 aim(kHandleX, kWallY - 0.4, 0.6);
  s.cameras = {look_at({kHandleX, -2.2, 1.9}, aim, up, 520.0, 520.0, 640, 480),
               look_at({kHandleX + 1.2, -1.9, 1.8}, aim, up, 520.0, 520.0, 640, 480)};
  if (mirrored) {
    for (auto& b : s.boxes) b = mirror(b);
    for (auto& c : s.cameras) {
      Vec3 eye = c.center();
      eye.x() = -eye.x();
      const Vec3 target(-aim.x(), aim.y(), aim.z());
      c = look_at(eye, target, up, c.fx, c.fy, c.width, c.height);
    }
  }
  return s;
}

SceneBundle render_bundle(const SyntheticScene& scene) {
  SceneBundle bundle;
  bundle.elements = scene.elements;
  for (const Camera& cam : scene.cameras) {
    BundleView view;
    view.camera = cam;
    view.depth = DepthImage(cam.width, cam.height, 0.0);
    view.rgb = RgbImage(cam.width, cam.height, Rgb{});
    for (const auto& e : scene.elements) view.masks[e.id] = Mask(cam.width, cam.height, 0);
    const Mat3& rot = cam.world_from_camera.rotation;
    const Vec3 o = cam.center();
    for (int v = 0; v < cam.height; ++v)
      for (int u = 0; u < cam.width; ++u) {
        const Vec3 d = rot * Vec3((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
        double best = std::numeric_limits<double>::infinity();
        const SceneBox* hit = nullptr;
        for (const auto& b : scene.boxes) {
          double t;
          if (ray_box(o, d, b, t) && t < best) best = t, hit = &b;
        }
        if (!hit) continue;
        // With the camera-frame ray scaled to unit z, t is the depth.
        const double depth = std::round(best * 1000.0) / 1000.0;
        if (depth <= 0.0 || depth > 65.535) continue;
        view.depth.at(u, v) = depth;
        view.rgb->at(u, v) = hit->color;
        view.masks[hit->element].at(u, v) = 255;
      }
    bundle.views.push_back(std::move(view));
  }
  return bundle;
}

ContactGraph reach_graph(const std::string& hand) {
  ContactGraph g;
  g.body_nodes = {hand + "_palm", "left_foot", "right_foot"};
  g.scene_nodes = {{"door_handle", ElementRole::Functional}, {"floor", ElementRole::Supporting}};
  g.edges = {{hand + "_palm", "door_handle"}, {"left_foot", "floor"}, {"right_foot", "floor"}};
  return g;
}

BodyPose reach_offset_pose(const Skeleton& skel, bool mirrored) {
  BodyPose pose = BodyPose::rest(skel);
  const PosedBody posed = forward_kinematics(skel, pose);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& c : posed.capsules_world) lowest = std::min(lowest, std::min(c.a.z(), c.b.z()) - c.radius);
  const double hx = mirrored ? -kHandleX : kHandleX;
  const Vec3 pelvis = posed.joint_position(0);
  pose.r = Vec3(hx - 0.45 - pelvis.x(), kWallY - 0.6 - pelvis.y(), -lowest);
  return pose;
}

void write_reach_scene(const std::filesystem::path& dir, bool mirrored, const Skeleton& skel) {
  save_bundle(dir, render_bundle(reach_scene(mirrored)));
  const std::string task = kReachTask;
  nlohmann::json elements = {{"elements",
                              {{{"label", "door handle"}, {"role", "functional"}},
                               {{"label", "door"}, {"role", "supporting"}},
                               {{"label", "floor"}, {"role", "supporting"}}}}};
  nlohmann::json fixtures;
  fixtures[fixture_key("elements", task)] = elements;
  fixtures[fixture_key("contact_graph", task)] =
      nlohmann::json::parse(contact_graph_to_json(reach_graph(mirrored ? "left" : "right")));
  write_json_file(dir / "fixtures.json", fixtures);
  std::ofstream(dir / "task.txt") << task << "\n";
  if (mirrored) save_pose(dir / "init_pose.json", reach_offset_pose(skel, true));
}

}  // namespace hsi
