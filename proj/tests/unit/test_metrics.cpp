#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "hsi/error.hpp"
#include "hsi/metrics.hpp"
#include "oracles.hpp"
#include "random_scene.hpp"

using namespace hsi;

TEST_CASE("metrics equal the brute-force oracle") {
  const Skeleton skel = default_skeleton();
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto s = testing_support::random_scene(skel, 600 + seed, 800);
    const PosedBody posed = forward_kinematics(skel, s.pose);
    CHECK(ncs(s.pose, skel, s.cloud) == oracle::ncs(posed, s.cloud));
    CHECK(*nfcd(s.pose, skel, s.elements, s.graph) == doctest::Approx(*oracle::nfcd(skel, posed, s.graph, s.elements)).epsilon(1e-12));
    CHECK(*fcd(s.pose, skel, s.elements, s.graph) == doctest::Approx(*oracle::fcd(skel, posed, s.graph, s.elements)).epsilon(1e-12));
    CHECK(ncs(s.pose, skel, s.cloud) < 1.0);
  }
}

TEST_CASE("fcd only averages hand-related functional edges; absent roles give nullopt") {
  const Skeleton skel = default_skeleton();
  auto s = testing_support::random_scene(skel, 610, 500);
  const PosedBody posed = forward_kinematics(skel, s.pose);
  const double palm = oracle::edge_chamfer(skel, posed, {"right_palm", "blob"}, s.elements);

  ContactGraph g;
  g.body_nodes = {"right_palm", "head"};
  g.scene_nodes = {{"blob", ElementRole::Functional}};
  g.edges = {{"right_palm", "blob"}, {"head", "blob"}};
  CHECK(*fcd(s.pose, skel, s.elements, g) == doctest::Approx(palm).epsilon(1e-12));
  CHECK_FALSE(nfcd(s.pose, skel, s.elements, g).has_value());

  g.edges = {{"head", "blob"}};
  CHECK_FALSE(fcd(s.pose, skel, s.elements, g).has_value());

  CHECK_THROWS_AS(ncs(s.pose, skel, PointCloud{}), Error);
}

TEST_CASE("report json, rooting and table") {
  const Skeleton skel = default_skeleton();
  const auto s = testing_support::random_scene(skel, 620, 500);
  const MetricsReport r = evaluate(s.pose, skel, s.cloud, s.elements, s.graph);
  CHECK(r.edges.size() == s.graph.edges.size());
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("ncs").get<double>() == r.ncs);
  CHECK(j.at("nfcd").get<double>() == *r.nfcd);
  CHECK(j.at("fcd").get<double>() == *r.fcd);
  CHECK(j.at("scs").is_null());
  CHECK(j.at("distance_unit") == "m^2");
  CHECK(j.at("edges").size() == r.edges.size());

  const MetricsReport root = r.root();
  CHECK(root.rooted);
  CHECK(*root.fcd == doctest::Approx(std::sqrt(*r.fcd)));
  CHECK(root.edges[0].chamfer == doctest::Approx(std::sqrt(r.edges[0].chamfer)));
  CHECK(root.ncs == r.ncs);
  CHECK(nlohmann::json::parse(root.to_json()).at("distance_unit") == "m");
  CHECK(r.to_table().find("FCD") != std::string::npos);
}
