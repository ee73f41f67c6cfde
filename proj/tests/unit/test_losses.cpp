#include <doctest.h>

#include <cmath>
#include <random>

#include "hsi/error.hpp"
#include "hsi/losses.hpp"
#include "oracles.hpp"
#include "random_scene.hpp"

using namespace hsi;

TEST_CASE("losses and metrics-side terms equal the brute-force oracle") {
  const Skeleton skel = default_skeleton();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = testing_support::random_scene(skel, 100 + seed, 600);
    const PosedBody posed = forward_kinematics(skel, s.pose);
    CHECK(loss_col(s.pose, skel, s.cloud) == doctest::Approx(oracle::loss_col(posed, s.cloud)).epsilon(1e-12));
    CHECK(loss_con(s.pose, skel, s.graph, s.elements) ==
          doctest::Approx(oracle::loss_con(skel, posed, s.graph, s.elements)).epsilon(1e-12));
    CHECK(oracle::loss_col(posed, s.cloud) > 0.0);
  }
  CHECK(loss_col(BodyPose::rest(skel), skel, PointCloud{}) == 0.0);
}

TEST_CASE("analytic gradient matches central differences away from ties") {
  const Skeleton skel = default_skeleton();
  int tested = 0;
  for (std::uint64_t seed = 200; tested < 6 && seed < 260; ++seed) {
    const auto s = testing_support::random_scene(skel, seed, 600);
    const PosedBody posed = forward_kinematics(skel, s.pose);
    if (oracle::kink_margin(skel, posed, s.cloud, s.graph, s.elements) < 1e-4) continue;
    const Objective obj(skel, s.pose.beta, s.cloud, s.graph, s.elements, {1.0, 1.0, 0.05}, PriorConfig::defaults(skel));
    const double loss = obj.evaluate(s.pose).total;
    const auto fd = oracle::finite_difference(obj, s.pose, ParamMask::all(skel), 1e-5, 1e-6 * std::max(1.0, loss));
    CHECK(fd.worst_rel < 1e-4);
    ++tested;
  }
  CHECK(tested == 6);
}

TEST_CASE("masked and zero-weight gradients") {
  const Skeleton skel = default_skeleton();
  const auto s = testing_support::random_scene(skel, 300, 500);
  const Objective zero(skel, s.pose.beta, s.cloud, s.graph, s.elements, {0.0, 0.0, 0.0}, PriorConfig::defaults(skel));
  std::vector<double> g;
  zero.evaluate(s.pose, ParamMask::all(skel), g);
  for (double x : g) CHECK(x == 0.0);

  const Objective prior(skel, s.pose.beta, s.cloud, s.graph, s.elements, {0.0, 0.0, 1.0}, PriorConfig::defaults(skel));
  prior.evaluate(s.pose, ParamMask::all(skel), g);
  for (int i = 0; i < 3; ++i) CHECK(g[kParamTranslation + i] == 0.0);

  const Objective full(skel, s.pose.beta, s.cloud, s.graph, s.elements, {1.0, 1.0, 0.05}, PriorConfig::defaults(skel));
  ParamMask mask(skel);
  mask.translation().joint(skel.joint_index("right_elbow"));
  CHECK(mask.count() == 6u);
  full.evaluate(s.pose, mask, g);
  std::vector<double> all;
  full.evaluate(s.pose, ParamMask::all(skel), all);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == (mask[i] ? all[i] : 0.0));

  const auto packed = gradient(s.pose, skel, s.cloud, s.graph, s.elements, {1.0, 1.0, 0.05}, mask);
  CHECK(packed.size() == 6u);
  CHECK(packed[0] == all[0]);
}

TEST_CASE("parameter packing round trip") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(5);
  const BodyPose pose = testing_support::random_pose(skel, rng);
  const auto x = pack_parameters(pose);
  CHECK(static_cast<int>(x.size()) == parameter_count(skel));
  CHECK(x[kParamYaw] == pose.phi.z());
  CHECK(x[kParamTilt] == pose.phi.x());
  BodyPose back = BodyPose::rest(skel);
  back.beta = pose.beta;
  unpack_parameters(x, back);
  CHECK(back == pose);
}

TEST_CASE("prior: zero at rest, barrier beyond the limit") {
  const Skeleton skel = default_skeleton();
  BodyPose pose = BodyPose::rest(skel);
  CHECK(loss_prior(pose, skel) == 0.0);
  const int elbow = skel.joint_index("left_elbow");
  const double limit = skel.joints[elbow].limit;
  PriorConfig cfg = PriorConfig::defaults(skel);
  pose.joint_rotation(elbow) = Vec3(0.0, 0.0, limit - 0.1);
  const double inside = loss_prior(pose, skel, cfg);
  CHECK(inside == doctest::Approx(cfg.weights[elbow - 1] * (limit - 0.1) * (limit - 0.1)));
  pose.joint_rotation(elbow) = Vec3(0.0, 0.0, limit + 0.1);
  CHECK(loss_prior(pose, skel, cfg) ==
        doctest::Approx(cfg.weights[elbow - 1] * (limit + 0.1) * (limit + 0.1) + cfg.barrier_weight * 0.01));
}

TEST_CASE("objective errors") {
  const Skeleton skel = default_skeleton();
  auto s = testing_support::random_scene(skel, 400, 300);
  ContactGraph g = s.graph;
  g.edges.push_back({"head", "sofa"});
  CHECK_THROWS_AS(Objective(skel, s.pose.beta, s.cloud, g, s.elements, {}, PriorConfig::defaults(skel)), Error);

  auto elements = s.elements;
  elements[0].points.points.clear();
  try {
    loss_con(s.pose, skel, s.graph, elements);
    FAIL("expected an empty-element error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyElement);
  }

  BodyPose far = s.pose;
  far.r = Vec3(1e200, 0.0, 0.0);
  try {
    gradient(far, skel, s.cloud, s.graph, s.elements, {1.0, 1.0, 0.05}, ParamMask::all(skel));
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }

  LossWeights w;
  w.col = -1.0;
  CHECK_THROWS_AS(w.validate(), Error);
}
