#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsi/camera.hpp"
#include "hsi/image.hpp"
#include "hsi/point_cloud.hpp"

namespace hsi {

enum class ElementRole { Functional, Supporting };

std::string_view to_string(ElementRole role);
/// Throws Schema for anything other than "functional" / "supporting".
ElementRole parse_role(std::string_view s);

/// Inclusive pixel rectangle of a mask in one view.
struct BBox2d {
  int view = 0;
  int min_u = 0, min_v = 0, max_u = 0, max_v = 0;

  Vec2 center() const { return {(min_u + max_u) / 2.0, (min_v + max_v) / 2.0}; }
  int area() const { return (max_u - min_u + 1) * (max_v - min_v + 1); }
};

struct SceneElement {
  std::string id;
  ElementRole role = ElementRole::Supporting;
  std::string label;
  PointCloud points;
  std::vector<BBox2d> boxes;

  const BBox2d* box_in_view(int view) const;
};

/// World points for every valid pixel on a `stride` grid.
PointCloud backproject(const DepthImage& depth, const Camera& cam, int stride = 1);

/// Restricts backprojection to mask-true pixels with valid depth; the bbox is
/// the tight bound of all mask-true pixels. Throws EmptyElement when no
/// mask-true pixel has valid depth.
SceneElement lift_mask(const Mask& mask, const DepthImage& depth, const Camera& cam,
                       std::string id, ElementRole role, std::string label, int view = 0);

/// Merges per-view lifts of one element id: points fused at `voxel`, boxes kept.
SceneElement merge_views(std::span<const SceneElement> lifts, double voxel);

// --- scene bundle directory -------------------------------------------------

struct ElementInfo {
  std::string id;
  ElementRole role = ElementRole::Supporting;
  std::string label;
};

struct BundleView {
  Camera camera;
  DepthImage depth;
  std::optional<RgbImage> rgb;
  std::map<std::string, Mask> masks;  // element id -> mask
};

struct SceneBundle {
  std::vector<BundleView> views;
  std::vector<ElementInfo> elements;
};

/// Loads `views/<k>/...` and `elements.json`. Throws Input on missing files.
SceneBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const std::filesystem::path& dir, const SceneBundle& bundle);

struct ReconstructOptions {
  int stride = 1;
  double scene_voxel = 0.02;
  double element_voxel = 0.01;
};

/// Everything downstream stages need from the scene, in a gravity-aligned
/// world frame (gravity along -z).
struct Reconstruction {
  PointCloud cloud;
  std::vector<SceneElement> elements;
  std::vector<Camera> cameras;

  const SceneElement* find(std::string_view id) const;
};

Reconstruction reconstruct(const SceneBundle& bundle, const ReconstructOptions& opts = {});

/// Writes `scene.ply`, `cameras/<k>.json`, `elements.json` and
/// `elements/<id>.ply` under `dir`.
void save_reconstruction(const std::filesystem::path& dir, const Reconstruction& recon);
Reconstruction load_reconstruction(const std::filesystem::path& dir);

}  // namespace hsi
