#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hsi/error.hpp"
#include "hsi/pipeline.hpp"
#include "hsi/synthetic.hpp"

using namespace hsi;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hsi_unit_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Flat floor at z = 0.1, a small functional blob 2 m from the camera's
// ground point, one camera.
Reconstruction flat_scene(const Vec3& blob) {
  Reconstruction r;
  SceneElement floor{"floor", ElementRole::Supporting, "floor", {}, {}};
  for (int i = -20; i <= 20; ++i)
    for (int k = -20; k <= 20; ++k) floor.points.points.push_back(Vec3(0.15 * i, 0.15 * k, 0.1));
  SceneElement handle{"handle", ElementRole::Functional, "handle", {}, {}};
  for (int i = 0; i < 10; ++i) handle.points.points.push_back(blob + Vec3(0.01 * (i % 3), 0.01 * (i / 3), 0.0));
  handle.boxes = {{0, 10, 10, 20, 20}, {1, 0, 0, 30, 30}, {2, 0, 0, 30, 30}};
  r.elements = {floor, handle};
  r.cameras = {look_at(Vec3(0.0, -2.0, 1.6), blob, Vec3::UnitZ(), 500, 500, 640, 480)};
  r.cloud = floor.points;
  for (const auto& p : handle.points.points) r.cloud.points.push_back(p);
  return r;
}

PipelineConfig reach_config(const fs::path& out, int k1, int k2) {
  const fs::path bundle = fs::path(HSI_DATA_DIR) / "scenes" / "reach";
  PipelineConfig cfg;
  cfg.bundle = bundle;
  cfg.task_prompt = kReachTask;
  cfg.reasoner = ReasonerConfig::parse("fixture:" + (bundle / "fixtures.json").string());
  cfg.refine = RefineConfig::defaults(default_skeleton());
  cfg.refine.stage1.iterations = k1;
  cfg.refine.stage2.iterations = k2;
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("init_tpose stands on the floor at the standoff, facing the element") {
  const Skeleton skel = default_skeleton();
  const Vec3 blob(0.7, 1.8, 1.0);
  const Reconstruction r = flat_scene(blob);
  const SceneElement& handle = *r.find("handle");
  const BodyPose pose = init_tpose(r, handle, skel, 0);
  const PosedBody posed = forward_kinematics(skel, pose);

  const Vec3 c = centroid(handle.points);
  const Vec3 pelvis = posed.joint_position(0);
  CHECK(Vec2(pelvis.x() - c.x(), pelvis.y() - c.y()).norm() == doctest::Approx(0.6).epsilon(1e-12));

  double lowest = 1e9;
  for (const auto& cap : posed.capsules_world) lowest = std::min({lowest, cap.a.z() - cap.radius, cap.b.z() - cap.radius});
  CHECK(lowest == doctest::Approx(0.1).epsilon(1e-12));

  const Vec3 fwd = posed.joint_world[0].rotation * Vec3::UnitY();
  const Vec2 to_c = Vec2(c.x() - pelvis.x(), c.y() - pelvis.y()).normalized();
  CHECK(std::acos(std::clamp(Vec2(fwd.x(), fwd.y()).normalized().dot(to_c), -1.0, 1.0)) < 1e-6);
  CHECK(pose.phi.x() == 0.0);
  CHECK(pose.phi.y() == 0.0);

  const BodyPose near = init_tpose(r, handle, skel, 0, 0.3);
  const Vec3 p2 = forward_kinematics(skel, near).joint_position(0);
  CHECK(Vec2(p2.x() - c.x(), p2.y() - c.y()).norm() == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("floor lookup, view choice and primary element") {
  Reconstruction r = flat_scene(Vec3(0.0, 1.0, 1.0));
  CHECK(find_floor(r).id == "floor");
  CHECK(choose_view(*r.find("handle")) == 1);

  ContactGraph g;
  g.body_nodes = {"right_palm", "left_foot"};
  g.scene_nodes = {{"handle", ElementRole::Functional}, {"floor", ElementRole::Supporting}};
  g.edges = {{"left_foot", "floor"}, {"right_palm", "handle"}};
  CHECK(primary_functional_element(r, g).id == "handle");
  g.edges.pop_back();
  CHECK_THROWS_AS(primary_functional_element(r, g), Error);

  r.elements.erase(r.elements.begin());
  try {
    find_floor(r);
    FAIL("expected a placement error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Placement);
  }
}

TEST_CASE("pipeline writes every artifact and is byte-deterministic") {
  const Skeleton skel = default_skeleton();
  const fs::path a = temp_dir("a"), b = temp_dir("b");
  const PipelineResult ra = run_pipeline(reach_config(a, 15, 5), skel);
  run_pipeline(reach_config(b, 15, 5), skel);
  for (const char* f : {"scene.ply", "graph.json", "pose_init.json", "graph_refined.json", "trace.csv", "pose.json",
                        "body.obj", "report.json"}) {
    CHECK_MESSAGE(fs::exists(a / f), f);
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  CHECK(ra.refined.ok());
  CHECK(ra.report.fcd.has_value());
  CHECK(ra.refined.trace.rows.size() == 16u + 6u);
  CHECK_FALSE(ra.init.laterality.swapped);
}

TEST_CASE("stage failures are tagged") {
  const Skeleton skel = default_skeleton();
  const fs::path bundle = temp_dir("broken_bundle");
  save_bundle(bundle, render_bundle(reach_scene(false)));
  fs::remove(bundle / "views" / "1" / "camera.json");
  PipelineConfig cfg = reach_config(temp_dir("broken_out"), 1, 1);
  cfg.bundle = bundle;
  try {
    run_pipeline(cfg, skel);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "reconstruct");
    CHECK(e.kind() == ErrorKind::Input);
    CHECK(std::string(e.what()).rfind("[reconstruct]", 0) == 0);
  }

  cfg = reach_config(temp_dir("no_fixture"), 1, 1);
  cfg.task_prompt = "juggle";
  try {
    run_pipeline(cfg, skel);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "reason");
    CHECK(fs::exists(cfg.output_dir / "scene.ply"));
  }

  cfg = reach_config(temp_dir("bad_cfg"), 1, 1);
  cfg.standoff = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
