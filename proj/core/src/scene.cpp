#include "hsi/scene.hpp"

#include <algorithm>
#include <climits>

#include <spdlog/spdlog.h>

#include "hsi/error.hpp"
#include "json_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hsi {

std::string_view to_string(ElementRole role) {
  return role == ElementRole::Functional ? "functional" : "supporting";
}

ElementRole parse_role(std::string_view s) {
  if (s == "functional") return ElementRole::Functional;
  if (s == "supporting") return ElementRole::Supporting;
  throw SchemaError("unknown element role '" + std::string(s) + "'", std::string(s));
}

const BBox2d* SceneElement::box_in_view(int view) const {
  for (const auto& b : boxes)
    if (b.view == view) return &b;
  return nullptr;
}

namespace {

void check_dims(const DepthImage& depth, const Camera& cam) {
  if (depth.width != cam.width || depth.height != cam.height)
    throw Error(ErrorKind::Input, "depth image is " + std::to_string(depth.width) + "x" +
                                      std::to_string(depth.height) + " but camera expects " +
                                      std::to_string(cam.width) + "x" + std::to_string(cam.height));
}

}  // namespace

PointCloud backproject(const DepthImage& depth, const Camera& cam, int stride) {
  if (stride < 1) throw Error(ErrorKind::Input, "stride must be >= 1");
  check_dims(depth, cam);
  PointCloud cloud;
  for (int v = 0; v < depth.height; v += stride)
    for (int u = 0; u < depth.width; u += stride) {
      const double d = depth.at(u, v);
      if (!(d > 0.0)) continue;
      cloud.points.push_back(cam.world_from_camera * unproject(u, v, d, cam));
    }
  return cloud;
}

SceneElement lift_mask(const Mask& mask, const DepthImage& depth, const Camera& cam,
                       std::string id, ElementRole role, std::string label, int view) {
  check_dims(depth, cam);
  if (mask.width != depth.width || mask.height != depth.height)
    throw Error(ErrorKind::Input, "mask '" + id + "' does not match the depth image size");

  SceneElement el;
  el.id = std::move(id);
  el.role = role;
  el.label = std::move(label);
  BBox2d box{view, INT_MAX, INT_MAX, INT_MIN, INT_MIN};
  for (int v = 0; v < mask.height; ++v)
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      box.min_u = std::min(box.min_u, u);
      box.min_v = std::min(box.min_v, v);
      box.max_u = std::max(box.max_u, u);
      box.max_v = std::max(box.max_v, v);
      const double d = depth.at(u, v);
      if (d > 0.0) el.points.points.push_back(cam.world_from_camera * unproject(u, v, d, cam));
    }
  if (el.points.empty())
    throw Error(ErrorKind::EmptyElement, "element '" + el.id + "' has no valid-depth pixels in view " +
                                             std::to_string(view));
  el.boxes.push_back(box);
  return el;
}

SceneElement merge_views(std::span<const SceneElement> lifts, double voxel) {
  if (lifts.empty()) throw Error(ErrorKind::EmptyElement, "no views to merge");
  SceneElement out;
  out.id = lifts.front().id;
  out.role = lifts.front().role;
  out.label = lifts.front().label;
  std::vector<PointCloud> clouds;
  for (const auto& l : lifts) {
    clouds.push_back(l.points);
    out.boxes.insert(out.boxes.end(), l.boxes.begin(), l.boxes.end());
  }
  out.points = fuse(clouds, voxel);
  return out;
}

const SceneElement* Reconstruction::find(std::string_view id) const {
  for (const auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

// --- bundle io ---------------------------------------------------------------

SceneBundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Input, "scene bundle not found: " + dir.string());
  SceneBundle bundle;

  const json elements = read_json_file(dir / "elements.json");
  if (!elements.is_array()) throw Error(ErrorKind::Input, "elements.json must be a list");
  for (const auto& e : elements) {
    try {
      bundle.elements.push_back({e.at("id").get<std::string>(), parse_role(e.at("role").get<std::string>()),
                                 e.value("label", e.at("id").get<std::string>())});
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::Input, "elements.json: " + std::string(ex.what()));
    } catch (const SchemaError& ex) {
      throw Error(ErrorKind::Input, "elements.json: " + std::string(ex.what()));
    }
  }

  const fs::path views = dir / "views";
  if (!fs::is_directory(views)) throw Error(ErrorKind::Input, "missing views/ in " + dir.string());
  std::vector<fs::path> view_dirs;
  for (const auto& entry : fs::directory_iterator(views))
    if (entry.is_directory()) view_dirs.push_back(entry.path());
  // numeric order when names are integers
  std::sort(view_dirs.begin(), view_dirs.end(), [](const fs::path& a, const fs::path& b) {
    const auto as = a.filename().string(), bs = b.filename().string();
    if (as.size() != bs.size()) return as.size() < bs.size();
    return as < bs;
  });
  if (view_dirs.empty()) throw Error(ErrorKind::Input, "bundle has no views: " + dir.string());

  for (const auto& vd : view_dirs) {
    BundleView view;
    if (!fs::exists(vd / "camera.json"))
      throw Error(ErrorKind::Input, "missing camera.json in " + vd.string());
    view.camera = read_camera_json(vd / "camera.json");
    if (!fs::exists(vd / "depth.png")) throw Error(ErrorKind::Input, "missing depth.png in " + vd.string());
    view.depth = read_depth_png(vd / "depth.png");
    validate_depth(view.depth);
    if (fs::exists(vd / "rgb.png")) view.rgb = read_rgb_png(vd / "rgb.png");
    for (const auto& info : bundle.elements) {
      const fs::path mp = vd / "masks" / (info.id + ".png");
      if (fs::exists(mp)) view.masks.emplace(info.id, read_mask_png(mp));
    }
    bundle.views.push_back(std::move(view));
  }
  return bundle;
}

void save_bundle(const fs::path& dir, const SceneBundle& bundle) {
  fs::create_directories(dir);
  json elements = json::array();
  for (const auto& e : bundle.elements)
    elements.push_back({{"id", e.id}, {"role", to_string(e.role)}, {"label", e.label}});
  write_json_file(dir / "elements.json", elements);
  for (std::size_t k = 0; k < bundle.views.size(); ++k) {
    const auto& view = bundle.views[k];
    const fs::path vd = dir / "views" / std::to_string(k);
    fs::create_directories(vd / "masks");
    write_camera_json(vd / "camera.json", view.camera);
    write_depth_png(vd / "depth.png", view.depth);
    if (view.rgb) write_rgb_png(vd / "rgb.png", *view.rgb);
    for (const auto& [id, mask] : view.masks) write_mask_png(vd / "masks" / (id + ".png"), mask);
  }
}

// --- reconstruction ----------------------------------------------------------

Reconstruction reconstruct(const SceneBundle& bundle, const ReconstructOptions& opts) {
  if (bundle.views.empty()) throw Error(ErrorKind::Input, "scene bundle has no views");
  Reconstruction recon;

  const Vec3 down(0.0, 0.0, -1.0);
  const Vec3 g = bundle.views.front().camera.gravity_dir;
  const bool aligned = (g - down).norm() <= 1e-12;
  const Mat3 align = aligned ? Mat3::Identity() : rotation_between(g, down);

  std::vector<PointCloud> clouds;
  for (const auto& view : bundle.views) {
    Camera cam = view.camera;
    if (!aligned) {
      cam.world_from_camera = Rigid{align, Vec3::Zero()} * cam.world_from_camera;
      cam.gravity_dir = down;
    }
    PointCloud cloud;
    for (int v = 0; v < view.depth.height; v += opts.stride)
      for (int u = 0; u < view.depth.width; u += opts.stride) {
        const double d = view.depth.at(u, v);
        if (!(d > 0.0)) continue;
        cloud.points.push_back(cam.world_from_camera * unproject(u, v, d, cam));
        if (view.rgb) cloud.colors.push_back(view.rgb->at(u, v));
      }
    if (cam.width != view.depth.width || cam.height != view.depth.height)
      throw Error(ErrorKind::Input, "depth image does not match camera size");
    clouds.push_back(std::move(cloud));
    recon.cameras.push_back(cam);
  }
  recon.cloud = fuse(clouds, opts.scene_voxel);

  for (const auto& info : bundle.elements) {
    std::vector<SceneElement> lifts;
    for (std::size_t k = 0; k < bundle.views.size(); ++k) {
      const auto it = bundle.views[k].masks.find(info.id);
      if (it == bundle.views[k].masks.end()) continue;
      try {
        lifts.push_back(lift_mask(it->second, bundle.views[k].depth, recon.cameras[k], info.id, info.role,
                                  info.label, static_cast<int>(k)));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyElement) throw;
        spdlog::debug("{}", e.what());
      }
    }
    if (lifts.empty())
      throw Error(ErrorKind::EmptyElement, "element '" + info.id + "' is empty in every view");
    recon.elements.push_back(merge_views(lifts, opts.element_voxel));
  }
  return recon;
}

void save_reconstruction(const fs::path& dir, const Reconstruction& recon) {
  fs::create_directories(dir / "cameras");
  fs::create_directories(dir / "elements");
  write_ply(dir / "scene.ply", recon.cloud);
  for (std::size_t k = 0; k < recon.cameras.size(); ++k)
    write_camera_json(dir / "cameras" / (std::to_string(k) + ".json"), recon.cameras[k]);
  json elements = json::array();
  for (const auto& e : recon.elements) {
    json boxes = json::array();
    for (const auto& b : e.boxes)
      boxes.push_back({{"view", b.view}, {"min_u", b.min_u}, {"min_v", b.min_v},
                       {"max_u", b.max_u}, {"max_v", b.max_v}});
    const std::string file = "elements/" + e.id + ".ply";
    write_ply(dir / file, e.points);
    elements.push_back({{"id", e.id}, {"role", to_string(e.role)}, {"label", e.label},
                        {"boxes", boxes}, {"points", file}});
  }
  write_json_file(dir / "elements.json", {{"cameras", recon.cameras.size()}, {"elements", elements}});
}

Reconstruction load_reconstruction(const fs::path& dir) {
  Reconstruction recon;
  const json meta = read_json_file(dir / "elements.json");
  try {
    const auto ncam = meta.at("cameras").get<std::size_t>();
    for (std::size_t k = 0; k < ncam; ++k)
      recon.cameras.push_back(read_camera_json(dir / "cameras" / (std::to_string(k) + ".json")));
    for (const auto& e : meta.at("elements")) {
      SceneElement el;
      el.id = e.at("id").get<std::string>();
      el.role = parse_role(e.at("role").get<std::string>());
      el.label = e.value("label", el.id);
      for (const auto& b : e.at("boxes"))
        el.boxes.push_back({b.at("view").get<int>(), b.at("min_u").get<int>(), b.at("min_v").get<int>(),
                            b.at("max_u").get<int>(), b.at("max_v").get<int>()});
      el.points = read_ply(dir / e.at("points").get<std::string>());
      recon.elements.push_back(std::move(el));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::Input, (dir / "elements.json").string() + ": " + ex.what());
  }
  recon.cloud = read_ply(dir / "scene.ply");
  return recon;
}

}  // namespace hsi
