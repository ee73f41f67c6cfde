#include "hsi/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hsi/error.hpp"
#include "hsi/kdtree.hpp"
#include "json_util.hpp"

namespace hsi {

namespace {

ElementRole edge_role(const ContactGraph& graph, std::span<const SceneElement> elements, const ContactEdge& e) {
  for (const auto& el : elements)
    if (el.id == e.element) return el.role;
  if (const SceneNode* n = graph.scene_node(e.element)) return n->role;
  throw Error(ErrorKind::Input, "contact edge references unknown element '" + e.element + "'");
}

const SceneElement& element_of(std::span<const SceneElement> elements, const std::string& id) {
  for (const auto& el : elements)
    if (el.id == id) return el;
  throw Error(ErrorKind::Input, "contact edge references unknown element '" + id + "'");
}

double chamfer(const Skeleton& skel, const PosedBody& posed, const ContactEdge& e,
               std::span<const SceneElement> elements) {
  const SceneElement& el = element_of(elements, e.element);
  if (el.points.empty()) throw Error(ErrorKind::EmptyElement, "element '" + el.id + "' has no points");
  const int part = skel.part_index(e.part);
  const KdTree tree(el.points.points);
  double sum = 0.0;
  const auto idx = contact_zone_indices(skel, part);
  for (std::size_t i : idx) sum += tree.nearest(posed.surface_samples[part][i]).squared_distance;
  return sum / static_cast<double>(idx.size());
}

template <class Pred>
std::optional<double> mean_chamfer(const BodyPose& pose, const Skeleton& skel, std::span<const SceneElement> elements,
                                   const ContactGraph& graph, Pred keep) {
  const PosedBody posed = forward_kinematics(skel, pose);
  double sum = 0.0;
  int n = 0;
  for (const auto& e : graph.edges) {
    if (!keep(e, edge_role(graph, elements, e))) continue;
    sum += chamfer(skel, posed, e, elements);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace

double ncs(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorKind::Input, "ncs needs a non-empty cloud");
  const PosedBody posed = forward_kinematics(skel, pose);
  std::size_t outside = 0;
  for (const Vec3& p : cloud.points)
    if (sdf(p, posed) >= 0.0) ++outside;
  return static_cast<double>(outside) / static_cast<double>(cloud.size());
}

std::optional<double> nfcd(const BodyPose& pose, const Skeleton& skel, std::span<const SceneElement> elements,
                           const ContactGraph& graph) {
  return mean_chamfer(pose, skel, elements, graph,
                      [](const ContactEdge&, ElementRole r) { return r == ElementRole::Supporting; });
}

std::optional<double> fcd(const BodyPose& pose, const Skeleton& skel, std::span<const SceneElement> elements,
                          const ContactGraph& graph) {
  return mean_chamfer(pose, skel, elements, graph, [](const ContactEdge& e, ElementRole r) {
    return r == ElementRole::Functional && is_hand_related_part(e.part);
  });
}

MetricsReport evaluate(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud,
                       std::span<const SceneElement> elements, const ContactGraph& graph) {
  MetricsReport r;
  r.ncs = ncs(pose, skel, cloud);
  r.nfcd = nfcd(pose, skel, elements, graph);
  r.fcd = fcd(pose, skel, elements, graph);
  const PosedBody posed = forward_kinematics(skel, pose);
  for (const auto& e : graph.edges)
    r.edges.push_back({e.part, e.element, edge_role(graph, elements, e), chamfer(skel, posed, e, elements)});
  return r;
}

MetricsReport MetricsReport::root() const {
  if (rooted) return *this;
  MetricsReport r = *this;
  r.rooted = true;
  if (r.nfcd) r.nfcd = std::sqrt(*r.nfcd);
  if (r.fcd) r.fcd = std::sqrt(*r.fcd);
  for (auto& e : r.edges) e.chamfer = std::sqrt(e.chamfer);
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  j["ncs"] = ncs;
  j["nfcd"] = opt(nfcd);
  j["fcd"] = opt(fcd);
  j["scs"] = opt(scs);
  j["distance_unit"] = rooted ? "m" : "m^2";
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& e : this->edges)
    edges.push_back({{"part", e.part}, {"element", e.element}, {"role", std::string(to_string(e.role))},
                     {"chamfer", e.chamfer}});
  j["edges"] = edges;
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_table() const {
  const char* unit = rooted ? "m" : "m^2";
  std::string out;
  char buf[256];
  auto line = [&](const char* name, const std::optional<double>& v, const char* u) {
    if (v)
      std::snprintf(buf, sizeof buf, "%-8s %14.6g %s\n", name, *v, u);
    else
      std::snprintf(buf, sizeof buf, "%-8s %14s\n", name, "n/a");
    out += buf;
  };
  line("NCS", ncs, "");
  line("N-FCD", nfcd, unit);
  line("FCD", fcd, unit);
  for (const auto& e : edges) {
    std::snprintf(buf, sizeof buf, "  %-20s -> %-20s %-10s %12.6g %s\n", e.part.c_str(), e.element.c_str(),
                  std::string(to_string(e.role)).c_str(), e.chamfer, unit);
    out += buf;
  }
  return out;
}

void save_report(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << report.to_json();
}

}  // namespace hsi
