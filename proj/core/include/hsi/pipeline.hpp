#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "hsi/contact_graph.hpp"
#include "hsi/error.hpp"
#include "hsi/metrics.hpp"
#include "hsi/reasoner.hpp"
#include "hsi/refine.hpp"
#include "hsi/scene.hpp"

namespace hsi {

/// An error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& what)
      : Error(kind, "[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  std::filesystem::path bundle;
  std::string task_prompt;
  ReasonerConfig reasoner;
  std::optional<std::filesystem::path> instructions;  // template file; built-in text when unset
  std::optional<std::filesystem::path> init_pose;  // t-pose placement when unset
  double standoff = 0.6;
  std::optional<int> view;                         // largest functional bbox when unset
  std::optional<double> laterality_delta;          // 2% of image width when unset
  ReconstructOptions reconstruction;
  RefineConfig refine;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  void validate() const;  // throws Input
};

/// Functional element driving initialization and laterality: the element of
/// the first functional edge with a hand-related part, else the first
/// functional element in the graph. Throws Input when there is none.
const SceneElement& primary_functional_element(const Reconstruction& recon, const ContactGraph& graph);

/// View with the largest bbox of `element` (lowest index on ties).
int choose_view(const SceneElement& element);

/// Supporting element whose id or label contains "floor". Throws Placement.
const SceneElement& find_floor(const Reconstruction& recon);

/// Rest pose standing on the floor, `standoff` meters from the element
/// centroid towards the camera of `view`, facing the element (yaw only).
BodyPose init_tpose(const Reconstruction& recon, const SceneElement& element, const Skeleton& skel, int view,
                    double standoff = 0.6);

/// Validated pose from file; Input error names the offending fields.
BodyPose load_init_pose(const std::filesystem::path& path, const Skeleton& skel);

// Individual stages. Each reads and writes the same artifacts as the CLI.

Reconstruction stage_reconstruct(const std::filesystem::path& bundle, const ReconstructOptions& opts);

/// Queries element proposals (logged against the reconstructed labels) and
/// the contact graph for `task_prompt`.
ContactGraph stage_reason(const Reconstruction& recon, const std::string& task_prompt, ReasonerClient& client,
                          const std::optional<std::string>& instructions = std::nullopt);

/// Contents of an instruction template file. Throws Input.
std::string read_instructions(const std::filesystem::path& path);

struct InitResult {
  BodyPose pose;
  LateralityResult laterality;
  int view = 0;
};

InitResult stage_init(const Reconstruction& recon, const ContactGraph& graph, const Skeleton& skel,
                      const std::optional<std::filesystem::path>& init_pose, std::optional<int> view,
                      double standoff, std::optional<double> laterality_delta);

struct PipelineResult {
  MetricsReport report;
  RefineResult refined;
  InitResult init;
  std::map<std::string, std::filesystem::path> artifacts;
};

/// Runs every stage and writes pose.json, pose_init.json, body.obj,
/// scene.ply, graph.json, graph_refined.json, trace.csv and report.json into
/// the output directory. Failures raise StageError; artifacts written by
/// earlier stages are kept.
PipelineResult run_pipeline(const PipelineConfig& cfg, const Skeleton& skel);

}  // namespace hsi
