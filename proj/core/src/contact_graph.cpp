#include "hsi/contact_graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hsi/error.hpp"
#include "json_util.hpp"

using nlohmann::json;

namespace hsi {

const SceneNode* ContactGraph::scene_node(std::string_view id) const {
  for (const auto& n : scene_nodes)
    if (n.id == id) return &n;
  return nullptr;
}

bool ContactGraph::has_functional_node() const {
  return std::any_of(scene_nodes.begin(), scene_nodes.end(),
                     [](const SceneNode& n) { return n.role == ElementRole::Functional; });
}

std::vector<Violation> validate(const ContactGraph& graph, std::span<const SceneElement> elements) {
  std::vector<SceneNode> available;
  for (const auto& e : elements) available.push_back({e.id, e.role});
  return validate(graph, std::span<const SceneNode>(available));
}

std::vector<Violation> validate(const ContactGraph& graph, std::span<const SceneNode> available) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

  std::set<std::string> body;
  for (const auto& b : graph.body_nodes) {
    if (!is_part_name(b)) add(ViolationKind::UnknownPart, "body node '" + b + "' is not in the part vocabulary");
    if (!body.insert(b).second) add(ViolationKind::DuplicateNode, "body node '" + b + "' listed twice");
  }
  std::set<std::string> scene;
  for (const auto& n : graph.scene_nodes) {
    if (!scene.insert(n.id).second) add(ViolationKind::DuplicateNode, "scene node '" + n.id + "' listed twice");
    const auto it = std::find_if(available.begin(), available.end(), [&](const SceneNode& a) { return a.id == n.id; });
    if (it == available.end()) {
      add(ViolationKind::DanglingElement, "scene node '" + n.id + "' does not name a scene element");
    } else if (it->role != n.role) {
      add(ViolationKind::RoleMismatch, "scene node '" + n.id + "' is declared " + std::string(to_string(n.role)) +
                                           " but the element is " + std::string(to_string(it->role)));
    }
  }

  std::set<ContactEdge> seen;
  bool functional_contact = false;
  for (const auto& e : graph.edges) {
    if (!is_part_name(e.part)) {
      add(ViolationKind::UnknownPart, "edge part '" + e.part + "' is not in the part vocabulary");
    } else if (!body.contains(e.part)) {
      add(ViolationKind::MissingBodyNode, "edge part '" + e.part + "' is not a body node");
    }
    const SceneNode* node = graph.scene_node(e.element);
    const bool exists = std::any_of(available.begin(), available.end(), [&](const SceneNode& a) { return a.id == e.element; });
    if (!exists) {
      add(ViolationKind::DanglingElement, "edge element '" + e.element + "' does not name a scene element");
    } else if (!node) {
      add(ViolationKind::MissingSceneNode, "edge element '" + e.element + "' is not a scene node");
    }
    if (node && node->role == ElementRole::Functional) functional_contact = true;
    if (!seen.insert(e).second)
      add(ViolationKind::DuplicateEdge, "edge (" + e.part + ", " + e.element + ") listed twice");
  }
  if (graph.has_functional_node() && !functional_contact)
    add(ViolationKind::NoFunctionalContact, "no edge touches a functional element");
  return out;
}

ContactGraph swap_hand_laterality(const ContactGraph& graph) {
  ContactGraph out = graph;
  auto swap = [](std::string& part) {
    if (is_hand_related_part(part)) part = mirror_part(part);
  };
  for (auto& b : out.body_nodes) swap(b);
  for (auto& e : out.edges) swap(e.part);
  return out;
}

ContactGraph restrict_to_role(const ContactGraph& graph, ElementRole role) {
  ContactGraph out;
  std::set<std::string> parts, elements;
  for (const auto& e : graph.edges) {
    const SceneNode* n = graph.scene_node(e.element);
    if (n && n->role == role) {
      out.edges.push_back(e);
      parts.insert(e.part);
      elements.insert(e.element);
    }
  }
  for (const auto& b : graph.body_nodes)
    if (parts.contains(b)) out.body_nodes.push_back(b);
  for (const auto& n : graph.scene_nodes)
    if (elements.contains(n.id)) out.scene_nodes.push_back(n);
  return out;
}

double default_laterality_delta(const Camera& cam) { return 0.02 * cam.width; }

LateralityResult refine_laterality(const ContactGraph& graph, const Skeleton& skel, const PosedBody& posed,
                                   const Camera& cam, const SceneElement& element, int view, double delta) {
  const BBox2d* box = element.box_in_view(view);
  if (!box) throw Error(ErrorKind::Input, "element '" + element.id + "' has no bounding box in view " + std::to_string(view));

  LateralityResult res{graph, 0.0, 0.0, false, {}};
  const Vec2 c = box->center();
  res.d_left = (project(posed.joint_position(skel.joint_index("left_wrist")), cam) - c).norm();
  res.d_right = (project(posed.joint_position(skel.joint_index("right_wrist")), cam) - c).norm();

  bool left_on_element = false, right_on_element = false;
  bool left_functional = false, right_functional = false;
  for (const auto& e : graph.edges) {
    if (!is_hand_related_part(e.part)) continue;
    const SceneNode* n = graph.scene_node(e.element);
    const bool functional = n && n->role == ElementRole::Functional;
    if (is_left_part(e.part)) {
      left_on_element |= e.element == element.id;
      left_functional |= functional;
    } else {
      right_on_element |= e.element == element.id;
      right_functional |= functional;
    }
  }

  if (left_functional && right_functional) {
    res.note = "both hands are assigned to functional elements; laterality left unchanged";
    spdlog::warn("{}", res.note);
    return res;
  }
  const bool swap = (left_on_element && res.d_left > res.d_right + delta) ||
                    (right_on_element && res.d_right > res.d_left + delta);
  if (swap) {
    res.graph = swap_hand_laterality(graph);
    res.swapped = true;
  }
  return res;
}

// --- json --------------------------------------------------------------------------

namespace {

ContactGraph from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("contact graph must be a JSON object");
  ContactGraph g;
  for (const auto& b : j.at("body_nodes")) g.body_nodes.push_back(b.get<std::string>());
  for (const auto& n : j.at("scene_nodes"))
    g.scene_nodes.push_back({n.at("id").get<std::string>(), parse_role(n.at("role").get<std::string>())});
  for (const auto& e : j.at("edges"))
    g.edges.push_back({e.at("part").get<std::string>(), e.at("element").get<std::string>()});
  return g;
}

json to_json(const ContactGraph& g) {
  json scene = json::array(), edges = json::array();
  for (const auto& n : g.scene_nodes) scene.push_back({{"id", n.id}, {"role", to_string(n.role)}});
  for (const auto& e : g.edges) edges.push_back({{"part", e.part}, {"element", e.element}});
  return {{"body_nodes", g.body_nodes}, {"scene_nodes", scene}, {"edges", edges}};
}

}  // namespace

ContactGraph parse_contact_graph(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("malformed contact graph: ") + e.what(), text);
  }
}

std::string contact_graph_to_json(const ContactGraph& graph) { return to_json(graph).dump(2); }

ContactGraph load_contact_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_contact_graph(ss.str());
  } catch (const SchemaError& e) {
    throw Error(ErrorKind::Input, path.string() + ": " + e.what());
  }
}

void save_contact_graph(const std::filesystem::path& path, const ContactGraph& graph) {
  write_json_file(path, to_json(graph));
}

}  // namespace hsi
