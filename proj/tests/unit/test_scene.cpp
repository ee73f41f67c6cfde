#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "hsi/error.hpp"
#include "hsi/scene.hpp"
#include "hsi/synthetic.hpp"

using namespace hsi;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hsi_unit_scene_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Camera test_camera(int w = 64, int h = 48) {
  return look_at(Vec3(0.3, -2.0, 1.5), Vec3(0.0, 0.0, 0.8), Vec3::UnitZ(), 55.0, 57.0, w, h);
}

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an hsi::Error");
  return ErrorKind::Input;
}

}  // namespace

TEST_CASE("depth, mask and rgb png round trips") {
  const fs::path dir = temp_dir("png");
  DepthImage depth(7, 5);
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 7; ++u) depth.at(u, v) = (u + v) % 3 == 0 ? 0.0 : 0.5 + 0.123 * u + 0.0101 * v;
  write_depth_png(dir / "d.png", depth);
  const DepthImage back = read_depth_png(dir / "d.png");
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 5);
  for (std::size_t i = 0; i < depth.data.size(); ++i) CHECK(back.data[i] == std::round(depth.data[i] * 1000.0) / 1000.0);

  Mask mask(4, 3);
  mask.at(1, 2) = 255;
  mask.at(3, 0) = 7;
  write_mask_png(dir / "m.png", mask);
  const Mask mback = read_mask_png(dir / "m.png");
  CHECK(mback.at(1, 2) != 0);
  CHECK(mback.at(3, 0) != 0);
  CHECK(mback.at(0, 0) == 0);

  RgbImage rgb(3, 2, Rgb{1, 2, 3});
  rgb.at(2, 1) = {200, 100, 50};
  write_rgb_png(dir / "c.png", rgb);
  CHECK(read_rgb_png(dir / "c.png").data == rgb.data);

  CHECK(kind_of([&] { read_depth_png(dir / "missing.png"); }) == ErrorKind::Io);
}

TEST_CASE("validate_depth rejects negative and non-finite values") {
  DepthImage d(2, 2, 1.0);
  CHECK_NOTHROW(validate_depth(d));
  d.at(1, 1) = -0.1;
  CHECK(kind_of([&] { validate_depth(d); }) == ErrorKind::Input);
  d.at(1, 1) = std::nan("");
  CHECK(kind_of([&] { validate_depth(d); }) == ErrorKind::Input);
}

TEST_CASE("camera projection, validation and json round trip") {
  const Camera cam = test_camera();
  CHECK_NOTHROW(cam.validate());
  const Vec3 p(0.1, 0.2, 0.9);
  const Vec2 px = project(p, cam);
  const Vec3 pc = cam.world_from_camera.inverse() * p;
  CHECK((cam.world_from_camera * unproject(px.x(), px.y(), pc.z(), cam) - p).norm() < 1e-12);

  CHECK(kind_of([&] { project(cam.center() - (p - cam.center()), cam); }) == ErrorKind::BehindCamera);

  Camera bad = cam;
  bad.fx = -1.0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::Input);
  bad = cam;
  bad.world_from_camera.rotation(0, 0) += 0.1;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::Input);

  const fs::path dir = temp_dir("cam");
  write_camera_json(dir / "camera.json", cam);
  const Camera back = read_camera_json(dir / "camera.json");
  CHECK(back.fx == cam.fx);
  CHECK(back.cy == cam.cy);
  CHECK(back.width == cam.width);
  CHECK((back.world_from_camera.rotation - cam.world_from_camera.rotation).norm() == 0.0);
  CHECK((back.world_from_camera.translation - cam.world_from_camera.translation).norm() == 0.0);
}

TEST_CASE("backproject then project is the identity on every valid pixel") {
  const Camera cam = test_camera();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  DepthImage depth(64, 48);
  for (auto& d : depth.data) d = u(rng);
  depth.at(3, 4) = 0.0;
  const PointCloud cloud = backproject(depth, cam);
  CHECK(cloud.size() == 64u * 48u - 1u);
  std::size_t k = 0;
  for (int v = 0; v < 48; ++v)
    for (int x = 0; x < 64; ++x) {
      if (depth.at(x, v) == 0.0) continue;
      CHECK((project(cloud.points[k++], cam) - Vec2(x, v)).norm() < 1e-9);
    }
  CHECK(backproject(depth, cam, 4).size() == 16u * 12u);
}

TEST_CASE("fuse replaces voxel cells by their centroid") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  PointCloud a, b;
  for (int i = 0; i < 400; ++i) a.points.push_back({u(rng), u(rng), u(rng)});
  for (int i = 0; i < 300; ++i) b.points.push_back({u(rng), u(rng), u(rng)});
  const double voxel = 0.05;
  const PointCloud clouds[] = {a, b};
  const PointCloud fused = fuse(clouds, voxel);

  std::map<std::array<long, 3>, std::pair<Vec3, int>> cells;
  for (const auto* c : {&a, &b})
    for (const auto& p : c->points) {
      auto& cell = cells[{static_cast<long>(std::floor(p.x() / voxel)), static_cast<long>(std::floor(p.y() / voxel)),
                          static_cast<long>(std::floor(p.z() / voxel))}];
      if (cell.second == 0) cell.first.setZero();
      cell.first += p;
      ++cell.second;
    }
  std::vector<Vec3> expected;
  for (const auto& [key, cell] : cells) expected.push_back(cell.first / cell.second);
  std::vector<Vec3> got = fused.points;
  std::sort(expected.begin(), expected.end(), lex_less);
  std::sort(got.begin(), got.end(), lex_less);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK((got[i] - expected[i]).norm() < 1e-12);

  CHECK(fuse(clouds, 0.0).size() == 700u);
  CHECK_FALSE(fused.has_colors());
}

TEST_CASE("ply round trip keeps points and colors") {
  PointCloud c;
  c.points = {{0.1, 0.2, 0.3}, {-1.0 / 3.0, 2.0, 1e-9}};
  c.colors = {{1, 2, 3}, {250, 0, 9}};
  const fs::path dir = temp_dir("ply");
  write_ply(dir / "c.ply", c);
  const PointCloud back = read_ply(dir / "c.ply");
  CHECK(back.points == c.points);
  CHECK(back.colors == c.colors);
  CHECK((centroid(c) - (c.points[0] + c.points[1]) / 2.0).norm() < 1e-15);
}

TEST_CASE("lift_mask uses masked valid pixels and reports a tight bbox") {
  const Camera cam = test_camera(16, 12);
  DepthImage depth(16, 12, 2.0);
  Mask mask(16, 12);
  for (int v = 3; v <= 6; ++v)
    for (int u = 5; u <= 9; ++u) mask.at(u, v) = 1;
  depth.at(5, 3) = 0.0;
  const SceneElement e = lift_mask(mask, depth, cam, "box", ElementRole::Functional, "a box", 1);
  CHECK(e.points.size() == 19u);
  REQUIRE(e.boxes.size() == 1u);
  CHECK(e.boxes[0].view == 1);
  CHECK(e.boxes[0].min_u == 5);
  CHECK(e.boxes[0].max_u == 9);
  CHECK(e.boxes[0].min_v == 3);
  CHECK(e.boxes[0].max_v == 6);
  CHECK(e.boxes[0].area() == 20);
  CHECK(e.box_in_view(1) != nullptr);
  CHECK(e.box_in_view(0) == nullptr);

  Mask empty(16, 12);
  CHECK(kind_of([&] { lift_mask(empty, depth, cam, "x", ElementRole::Supporting, "x"); }) == ErrorKind::EmptyElement);
}

TEST_CASE("bundle save/load round trip and reconstruction of the synthetic scene") {
  const SceneBundle bundle = render_bundle(reach_scene(false));
  const fs::path dir = temp_dir("bundle");
  save_bundle(dir, bundle);
  const SceneBundle back = load_bundle(dir);
  REQUIRE(back.views.size() == bundle.views.size());
  for (std::size_t k = 0; k < back.views.size(); ++k) {
    CHECK(back.views[k].depth.data == bundle.views[k].depth.data);
    CHECK(back.views[k].masks.size() == bundle.views[k].masks.size());
  }
  CHECK(back.elements.size() == bundle.elements.size());

  const Reconstruction r = reconstruct(back);
  CHECK_FALSE(r.cloud.empty());
  REQUIRE(r.find("door_handle") != nullptr);
  CHECK(r.find("door_handle")->role == ElementRole::Functional);
  CHECK(r.find("floor") != nullptr);
  CHECK(r.find("nope") == nullptr);
  CHECK(r.cameras.size() == bundle.views.size());

  const fs::path rdir = temp_dir("recon");
  save_reconstruction(rdir, r);
  const Reconstruction rb = load_reconstruction(rdir);
  CHECK(rb.cloud.points == r.cloud.points);
  CHECK(rb.elements.size() == r.elements.size());

  fs::remove(dir / "views" / "0" / "camera.json");
  CHECK(kind_of([&] { load_bundle(dir); }) == ErrorKind::Input);
}

TEST_CASE("role parsing") {
  CHECK(parse_role("functional") == ElementRole::Functional);
  CHECK(parse_role("supporting") == ElementRole::Supporting);
  CHECK(to_string(ElementRole::Functional) == "functional");
  CHECK_THROWS_AS(parse_role("decorative"), SchemaError);
}
