#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsi/body.hpp"
#include "hsi/contact_graph.hpp"
#include "hsi/scene.hpp"

namespace hsi {

/// Fraction of scene points with sdf >= 0. Throws Input on an empty cloud.
double ncs(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud);

/// Mean over supporting edges of the single-sided Chamfer term (foot edges
/// use the toe/heel zone). nullopt when the graph has no supporting edge.
std::optional<double> nfcd(const BodyPose& pose, const Skeleton& skel, std::span<const SceneElement> elements,
                           const ContactGraph& graph);

/// Mean over functional edges with a hand-related part. nullopt when there is none.
std::optional<double> fcd(const BodyPose& pose, const Skeleton& skel, std::span<const SceneElement> elements,
                          const ContactGraph& graph);

struct EdgeMetric {
  std::string part;
  std::string element;
  ElementRole role = ElementRole::Supporting;
  double chamfer = 0.0;
};

struct MetricsReport {
  double ncs = 1.0;
  std::optional<double> nfcd;
  std::optional<double> fcd;
  std::optional<double> scs;  // filled by external scorers only
  std::vector<EdgeMetric> edges;
  bool rooted = false;        // distances square-rooted (meters)

  /// Copy with every distance square-rooted.
  MetricsReport root() const;
  std::string to_json() const;
  std::string to_table() const;
};

MetricsReport evaluate(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud,
                       std::span<const SceneElement> elements, const ContactGraph& graph);

void save_report(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace hsi
