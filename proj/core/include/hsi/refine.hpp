#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsi/losses.hpp"

namespace hsi {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct StageConfig {
  int iterations = 0;
  double learning_rate = 1e-2;
  bool translation = true;
  bool yaw = false;
  std::vector<int> joints;  // free joints (1..51)
  std::vector<std::pair<int, double>> lr_multipliers;
  bool use_prior = true;

  void validate(const Skeleton& skel) const;  // throws Input
  ParamMask mask(const Skeleton& skel) const;
};

struct RefineConfig {
  StageConfig stage1;
  StageConfig stage2;
  LossWeights weights;
  PriorConfig prior;
  AdamParams adam;
  double safeguard_ratio = 10.0;
  int snapshot_interval = 0;  // 0 disables parameter snapshots
  std::uint64_t seed = 0;

  /// Stage 1: r, yaw and the arm joints, no prior. Stage 2: r and all joint
  /// rotations, ankles at twice the step size.
  static RefineConfig defaults(const Skeleton& skel);
  void validate(const Skeleton& skel) const;
};

/// Overlays keys present in the JSON file onto `base`.
RefineConfig load_refine_config(const std::filesystem::path& path, const Skeleton& skel, RefineConfig base);
RefineConfig refine_config_from_json_text(const std::string& text, const Skeleton& skel, RefineConfig base);

struct TraceRow {
  int stage = 0;
  int iteration = 0;
  LossTerms terms;
  bool safeguard = false;
};

struct Snapshot {
  int stage = 0;
  int iteration = 0;
  std::vector<double> params;
};

struct OptimTrace {
  std::vector<TraceRow> rows;
  std::vector<Snapshot> snapshots;

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  /// Rows of one stage, in iteration order.
  std::vector<TraceRow> stage_rows(int stage) const;
};

struct RefineResult {
  BodyPose pose;
  OptimTrace trace;
  std::optional<std::string> error;  // set when a numeric error aborted the run

  bool ok() const { return !error.has_value(); }
};

RefineResult refine(const BodyPose& init, const Skeleton& skel, const PointCloud& cloud, const ContactGraph& graph,
                    std::span<const SceneElement> elements, const RefineConfig& cfg);

}  // namespace hsi
