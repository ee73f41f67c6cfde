#include <doctest.h>

#include <algorithm>

#include "hsi/contact_graph.hpp"
#include "hsi/error.hpp"

using namespace hsi;

namespace {

const SceneNode kAvailable[] = {{"handle", ElementRole::Functional}, {"floor", ElementRole::Supporting}};

ContactGraph good_graph() {
  ContactGraph g;
  g.body_nodes = {"left_palm", "left_forearm", "left_foot", "right_foot"};
  g.scene_nodes = {{"handle", ElementRole::Functional}, {"floor", ElementRole::Supporting}};
  g.edges = {{"left_palm", "handle"}, {"left_forearm", "handle"}, {"left_foot", "floor"}, {"right_foot", "floor"}};
  return g;
}

bool has(const std::vector<Violation>& v, ViolationKind k) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

std::vector<Violation> check(const ContactGraph& g) { return validate(g, std::span<const SceneNode>(kAvailable)); }

}  // namespace

TEST_CASE("validate flags every invariant violation") {
  CHECK(check(good_graph()).empty());

  ContactGraph g = good_graph();
  g.body_nodes.push_back("tail");
  CHECK(has(check(g), ViolationKind::UnknownPart));

  g = good_graph();
  g.edges.push_back({"head", "handle"});
  CHECK(has(check(g), ViolationKind::MissingBodyNode));

  g = good_graph();
  g.edges.push_back({"left_foot", "sofa"});
  CHECK(has(check(g), ViolationKind::DanglingElement));

  g = good_graph();
  g.scene_nodes.pop_back();
  CHECK(has(check(g), ViolationKind::MissingSceneNode));

  g = good_graph();
  g.body_nodes.push_back("left_palm");
  CHECK(has(check(g), ViolationKind::DuplicateNode));

  g = good_graph();
  g.edges.push_back(g.edges.front());
  CHECK(has(check(g), ViolationKind::DuplicateEdge));

  g = good_graph();
  g.scene_nodes[1].role = ElementRole::Functional;
  CHECK(has(check(g), ViolationKind::RoleMismatch));

  g = good_graph();
  g.edges.erase(g.edges.begin(), g.edges.begin() + 2);
  CHECK(has(check(g), ViolationKind::NoFunctionalContact));
}

TEST_CASE("laterality swap mirrors hand-related nodes only and is an involution") {
  const ContactGraph g = good_graph();
  const ContactGraph s = swap_hand_laterality(g);
  CHECK(s.body_nodes == std::vector<std::string>{"right_palm", "right_forearm", "left_foot", "right_foot"});
  CHECK(s.edges[0] == ContactEdge{"right_palm", "handle"});
  CHECK(s.edges[2] == ContactEdge{"left_foot", "floor"});
  CHECK(swap_hand_laterality(s) == g);
  CHECK(check(s).empty());
}

TEST_CASE("restrict_to_role keeps matching edges") {
  const ContactGraph f = restrict_to_role(good_graph(), ElementRole::Functional);
  CHECK(f.edges.size() == 2u);
  CHECK(f.scene_nodes.size() == 1u);
  const ContactGraph s = restrict_to_role(good_graph(), ElementRole::Supporting);
  CHECK(s.edges.size() == 2u);
  CHECK(s.edges[0].part == "left_foot");
}

TEST_CASE("graph json round trip and schema errors") {
  const ContactGraph g = good_graph();
  CHECK(parse_contact_graph(contact_graph_to_json(g)) == g);
  CHECK_THROWS_AS(parse_contact_graph("not json"), SchemaError);
  CHECK_THROWS_AS(parse_contact_graph("[1, 2]"), SchemaError);
  CHECK_THROWS_AS(parse_contact_graph(R"({"body_nodes": [], "scene_nodes": [{"id": "x", "role": "odd"}], "edges": []})"),
                  SchemaError);
  try {
    parse_contact_graph(R"({"body_nodes": ["head"]})");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.raw_payload().find("head") != std::string::npos);
  }
}

TEST_CASE("refine_laterality swaps when the assigned hand is farther from the element") {
  const Skeleton skel = default_skeleton();
  const PosedBody posed = forward_kinematics(skel, BodyPose::rest(skel));
  // camera in front of the body looking back at it
  const Camera cam = look_at(Vec3(0.0, 3.0, 1.2), Vec3(0.0, 0.0, 1.2), Vec3::UnitZ(), 400.0, 400.0, 640, 480);
  const Vec2 right = project(posed.joint_position(skel.joint_index("right_wrist")), cam);
  const Vec2 left = project(posed.joint_position(skel.joint_index("left_wrist")), cam);
  CHECK(default_laterality_delta(cam) == doctest::Approx(12.8));

  auto element_at = [](const Vec2& c) {
    SceneElement e{"handle", ElementRole::Functional, "handle", {}, {}};
    e.boxes.push_back({0, static_cast<int>(c.x()) - 5, static_cast<int>(c.y()) - 5, static_cast<int>(c.x()) + 5,
                       static_cast<int>(c.y()) + 5});
    return e;
  };

  const ContactGraph g = good_graph();
  const LateralityResult near_right = refine_laterality(g, skel, posed, cam, element_at(right), 0, 12.8);
  CHECK(near_right.swapped);
  CHECK(near_right.d_left > near_right.d_right + 12.8);
  CHECK(near_right.graph == swap_hand_laterality(g));

  const LateralityResult near_left = refine_laterality(g, skel, posed, cam, element_at(left), 0, 12.8);
  CHECK_FALSE(near_left.swapped);
  CHECK(near_left.graph == g);

  // equidistant: within delta, no swap
  const LateralityResult middle = refine_laterality(g, skel, posed, cam, element_at((left + right) / 2.0), 0, 12.8);
  CHECK_FALSE(middle.swapped);

  try {
    refine_laterality(g, skel, posed, cam, element_at(right), 3, 12.8);
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }

  const Camera behind = look_at(Vec3(0.0, 3.0, 1.2), Vec3(0.0, 6.0, 1.2), Vec3::UnitZ(), 400.0, 400.0, 640, 480);
  try {
    refine_laterality(g, skel, posed, behind, element_at(right), 0, 12.8);
    FAIL("expected a behind-camera error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BehindCamera);
  }
}
