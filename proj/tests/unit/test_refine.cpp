#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "hsi/error.hpp"
#include "hsi/pipeline.hpp"
#include "hsi/refine.hpp"
#include "hsi/synthetic.hpp"
#include "random_scene.hpp"

using namespace hsi;

namespace {

RefineConfig short_config(const Skeleton& skel, int k1, int k2) {
  RefineConfig cfg = RefineConfig::defaults(skel);
  cfg.stage1.iterations = k1;
  cfg.stage2.iterations = k2;
  return cfg;
}

}  // namespace

TEST_CASE("defaults follow the two-stage schedule") {
  const Skeleton skel = default_skeleton();
  const RefineConfig cfg = RefineConfig::defaults(skel);
  CHECK(cfg.stage1.iterations == 400);
  CHECK(cfg.stage1.learning_rate == 1e-2);
  CHECK(cfg.stage2.iterations == 200);
  CHECK(cfg.stage2.learning_rate == doctest::Approx(2e-3));
  CHECK(cfg.stage1.yaw);
  CHECK_FALSE(cfg.stage1.use_prior);
  CHECK_FALSE(cfg.stage2.yaw);
  CHECK(cfg.stage2.use_prior);
  CHECK(cfg.stage1.joints == arm_joints(skel));
  CHECK(cfg.stage2.lr_multipliers.size() == 2u);
  CHECK(cfg.weights.col == 1.0);
  CHECK(cfg.weights.prior == 0.05);
  const ParamMask m1 = cfg.stage1.mask(skel);
  CHECK(m1.count() == 3u + 1u + 3u * 6u);
  CHECK_FALSE(m1[kParamTilt]);
  CHECK_FALSE(cfg.stage2.mask(skel)[kParamTilt]);
}

TEST_CASE("zero iterations return the init exactly") {
  const Skeleton skel = default_skeleton();
  const auto s = testing_support::random_scene(skel, 500, 400);
  const RefineResult r = refine(s.pose, skel, s.cloud, s.graph, s.elements, short_config(skel, 0, 0));
  CHECK(r.ok());
  CHECK(r.pose == s.pose);
  CHECK(r.trace.rows.empty());
}

TEST_CASE("frozen parameters stay bit-identical in each stage") {
  const Skeleton skel = default_skeleton();
  const auto s = testing_support::random_scene(skel, 501, 600);

  const RefineResult one = refine(s.pose, skel, s.cloud, s.graph, s.elements, short_config(skel, 30, 0));
  CHECK(one.pose.beta == s.pose.beta);
  CHECK(one.pose.phi.x() == s.pose.phi.x());
  CHECK(one.pose.phi.y() == s.pose.phi.y());
  const auto arms = arm_joints(skel);
  bool moved_arm = false;
  for (int j = 1; j < static_cast<int>(skel.joints.size()); ++j) {
    const bool arm = std::find(arms.begin(), arms.end(), j) != arms.end();
    if (!arm) CHECK(one.pose.joint_rotation(j) == s.pose.joint_rotation(j));
    moved_arm |= arm && one.pose.joint_rotation(j) != s.pose.joint_rotation(j);
  }
  CHECK(moved_arm);

  const RefineResult two = refine(s.pose, skel, s.cloud, s.graph, s.elements, short_config(skel, 0, 30));
  CHECK(two.pose.beta == s.pose.beta);
  CHECK(two.pose.phi == s.pose.phi);
}

TEST_CASE("trace layout, csv and determinism") {
  const Skeleton skel = default_skeleton();
  const auto s = testing_support::random_scene(skel, 502, 500);
  RefineConfig cfg = short_config(skel, 12, 7);
  cfg.snapshot_interval = 5;
  const RefineResult a = refine(s.pose, skel, s.cloud, s.graph, s.elements, cfg);
  const RefineResult b = refine(s.pose, skel, s.cloud, s.graph, s.elements, cfg);
  CHECK(a.trace.rows.size() == 13u + 8u);
  CHECK(a.trace.stage_rows(1).size() == 13u);
  CHECK(a.trace.stage_rows(2).back().iteration == 7);
  CHECK(a.trace.to_csv() == b.trace.to_csv());
  CHECK(a.pose == b.pose);
  CHECK(a.trace.to_csv().rfind("stage,iteration,L_col,L_con,L_prior,total,safeguard\n", 0) == 0);
  CHECK(a.trace.snapshots.size() == 3u + 2u);
  CHECK(static_cast<int>(a.trace.snapshots[0].params.size()) == parameter_count(skel));
  for (const auto& row : a.trace.rows) {
    CHECK(std::isfinite(row.terms.total));
  }
}

TEST_CASE("prior-only stage two decreases the prior on its first step") {
  const Skeleton skel = default_skeleton();
  const auto s = testing_support::random_scene(skel, 503, 300);
  RefineConfig cfg = short_config(skel, 0, 1);
  cfg.weights = {0.0, 0.0, 1.0};
  const RefineResult r = refine(s.pose, skel, s.cloud, s.graph, s.elements, cfg);
  const auto rows = r.trace.stage_rows(2);
  REQUIRE(rows.size() == 2u);
  CHECK(rows[1].terms.prior < rows[0].terms.prior);
}

TEST_CASE("total loss does not rise over either stage on the reach scene") {
  const Skeleton skel = default_skeleton();
  const Reconstruction recon = reconstruct(render_bundle(reach_scene(false)));
  const ContactGraph g = reach_graph("right");
  const SceneElement& handle = *recon.find("door_handle");
  const BodyPose init = init_tpose(recon, handle, skel, choose_view(handle));
  const RefineResult r = refine(init, skel, recon.cloud, g, recon.elements, RefineConfig::defaults(skel));
  REQUIRE(r.ok());
  for (int stage : {1, 2}) {
    const auto rows = r.trace.stage_rows(stage);
    REQUIRE_FALSE(rows.empty());
    CHECK(rows.back().terms.total <= rows.front().terms.total);
  }
  const auto rows1 = r.trace.stage_rows(1);
  CHECK(rows1.back().terms.con < 0.1 * rows1.front().terms.con);
}

TEST_CASE("a numeric failure returns the last committed pose with an error") {
  const Skeleton skel = default_skeleton();
  const auto s = testing_support::random_scene(skel, 504, 300);
  BodyPose far = s.pose;
  far.r = Vec3(1e200, 0.0, 0.0);
  const RefineResult r = refine(far, skel, s.cloud, s.graph, s.elements, short_config(skel, 5, 5));
  CHECK_FALSE(r.ok());
  CHECK(r.pose == far);
}

TEST_CASE("refine config json overlay") {
  const Skeleton skel = default_skeleton();
  const RefineConfig base = RefineConfig::defaults(skel);
  const RefineConfig c = refine_config_from_json_text(
      R"({"weights": {"col": 0.5}, "stage1": {"iterations": 10, "joints": ["right_elbow"]},
          "stage2": {"learning_rate": 0.001, "lr_multipliers": {"left_knee": 3.0}},
          "prior": {"barrier_weight": 2.0, "weights": {"spine1": 4.0}}, "safeguard_ratio": 5, "seed": 9})",
      skel, base);
  CHECK(c.weights.col == 0.5);
  CHECK(c.weights.con == base.weights.con);
  CHECK(c.stage1.iterations == 10);
  CHECK(c.stage1.joints == std::vector<int>{skel.joint_index("right_elbow")});
  CHECK(c.stage2.learning_rate == 0.001);
  CHECK(c.stage2.iterations == base.stage2.iterations);
  CHECK(c.prior.barrier_weight == 2.0);
  CHECK(c.prior.weights[skel.joint_index("spine1") - 1] == 4.0);
  CHECK(c.safeguard_ratio == 5.0);
  CHECK(c.seed == 9u);

  CHECK_THROWS_AS(refine_config_from_json_text(R"({"stage1": {"joints": ["tail"]}})", skel, base), Error);
  CHECK_THROWS_AS(refine_config_from_json_text(R"({"stage1": {"iterations": -1}})", skel, base), Error);
  CHECK_THROWS_AS(refine_config_from_json_text("{oops", skel, base), Error);
}
