#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsi/body.hpp"
#include "hsi/camera.hpp"
#include "hsi/scene.hpp"

namespace hsi {

struct SceneNode {
  std::string id;
  ElementRole role = ElementRole::Supporting;
  bool operator==(const SceneNode&) const = default;
};

struct ContactEdge {
  std::string part;
  std::string element;
  bool operator==(const ContactEdge&) const = default;
  auto operator<=>(const ContactEdge&) const = default;
};

/// Bipartite body-part / scene-element contact relation.
struct ContactGraph {
  std::vector<std::string> body_nodes;
  std::vector<SceneNode> scene_nodes;
  std::vector<ContactEdge> edges;

  const SceneNode* scene_node(std::string_view id) const;
  bool has_functional_node() const;
  bool operator==(const ContactGraph&) const = default;
};

enum class ViolationKind {
  UnknownPart,
  DanglingElement,
  MissingBodyNode,
  MissingSceneNode,
  DuplicateNode,
  DuplicateEdge,
  RoleMismatch,
  NoFunctionalContact,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

/// All invariant violations of `graph` against the available scene elements.
/// Empty result means the graph is valid.
std::vector<Violation> validate(const ContactGraph& graph, std::span<const SceneElement> elements);

/// Same checks against element (id, role) pairs only.
std::vector<Violation> validate(const ContactGraph& graph, std::span<const SceneNode> available);

/// Mirrors every hand-related node (palms, fingers, forearms) on both the
/// body-node list and the edges.
ContactGraph swap_hand_laterality(const ContactGraph& graph);

/// Subgraph with only the edges whose element has `role`.
ContactGraph restrict_to_role(const ContactGraph& graph, ElementRole role);

struct LateralityResult {
  ContactGraph graph;
  double d_left = 0.0;
  double d_right = 0.0;
  bool swapped = false;
  std::string note;  // why refinement was skipped, if it was
};

/// Projects both wrists into `cam` and compares their pixel distance to the
/// centre of `element`'s box in `view`. Swaps hand nodes when the graph's
/// hand on `element` is the farther one by more than `delta` pixels.
/// Throws BehindCamera if a wrist projects behind the camera and Input if the
/// element has no box in `view`.
LateralityResult refine_laterality(const ContactGraph& graph, const Skeleton& skel, const PosedBody& posed,
                                   const Camera& cam, const SceneElement& element, int view, double delta);

/// Default tolerance: 2% of the image width.
double default_laterality_delta(const Camera& cam);

ContactGraph parse_contact_graph(const std::string& json_text);  // throws SchemaError
std::string contact_graph_to_json(const ContactGraph& graph);
ContactGraph load_contact_graph(const std::filesystem::path& path);
void save_contact_graph(const std::filesystem::path& path, const ContactGraph& graph);

}  // namespace hsi
