#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hsi/body.hpp"
#include "hsi/contact_graph.hpp"
#include "hsi/kdtree.hpp"
#include "hsi/point_cloud.hpp"
#include "hsi/scene.hpp"

namespace hsi {

struct LossWeights {
  double col = 1.0;
  double con = 1.0;
  double prior = 0.05;

  void validate() const;  // throws Input unless all finite and >= 0
};

/// Quadratic pull of the body joints towards the rest pose plus a soft
/// barrier on rotation angles beyond each joint's limit.
struct PriorConfig {
  std::vector<double> weights;  // per body joint 1..21
  double barrier_weight = 10.0;

  static PriorConfig defaults(const Skeleton& skel);
};

struct LossTerms {
  double col = 0.0;
  double con = 0.0;
  double prior = 0.0;
  double total = 0.0;
};

// --- parameter layout ------------------------------------------------------------
// [r.x r.y r.z | yaw (phi.z) | tilt (phi.x phi.y) | theta of joints 1..n-1, xyz each]

inline constexpr int kParamTranslation = 0;
inline constexpr int kParamYaw = 3;
inline constexpr int kParamTilt = 4;
inline constexpr int kParamJoints = 6;

inline int parameter_count(const Skeleton& skel) { return kParamJoints + 3 * (static_cast<int>(skel.joints.size()) - 1); }
inline int joint_param_offset(int joint) { return kParamJoints + 3 * (joint - 1); }

std::vector<double> pack_parameters(const BodyPose& pose);
/// Writes the packed values back; beta is untouched.
void unpack_parameters(std::span<const double> params, BodyPose& pose);

/// Which packed parameters are free.
class ParamMask {
 public:
  ParamMask() = default;
  explicit ParamMask(const Skeleton& skel) : free_(parameter_count(skel), false) {}

  static ParamMask all(const Skeleton& skel);

  ParamMask& translation(bool on = true);
  ParamMask& yaw(bool on = true);
  ParamMask& tilt(bool on = true);
  ParamMask& joint(int j, bool on = true);

  bool operator[](std::size_t i) const { return free_[i]; }
  std::size_t size() const { return free_.size(); }
  std::size_t count() const;
  bool joint_free(int j) const { return free_[joint_param_offset(j)]; }

 private:
  std::vector<bool> free_;
};

/// Precomputed total objective for one scene, graph and shape. Owns the
/// nearest-neighbour indices of the contact elements.
class Objective {
 public:
  Objective(const Skeleton& skel, const std::vector<double>& beta, const PointCloud& cloud,
            const ContactGraph& graph, std::span<const SceneElement> elements, LossWeights weights,
            PriorConfig prior);

  LossTerms evaluate(const BodyPose& pose) const;
  /// Fills `grad` (size parameter_count) with d total / d params; entries
  /// outside `mask` are zero.
  LossTerms evaluate(const BodyPose& pose, const ParamMask& mask, std::vector<double>& grad) const;

  void set_weights(const LossWeights& w) { weights_ = w; }
  const LossWeights& weights() const { return weights_; }
  const Skeleton& skeleton() const { return skel_; }

  /// Single-sided Chamfer term of each edge, in graph order.
  std::vector<double> edge_terms(const BodyPose& pose) const;

 private:
  struct EdgeTerm {
    int part = 0;
    std::vector<std::size_t> samples;  // indices into the part's anchors
    std::shared_ptr<const KdTree> tree;
  };

  LossTerms run(const BodyPose& pose, const ParamMask* mask, std::vector<double>* grad) const;

  Skeleton skel_;
  LocalGeometry geom_;
  PointCloud cloud_;
  std::vector<EdgeTerm> edges_;
  LossWeights weights_;
  PriorConfig prior_;
};

/// Sum over scene points of max(0, -sdf). Zero for an empty cloud.
double loss_col(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud);
/// Sum over edges of the single-sided Chamfer term; foot edges use the toe
/// and heel zone. Throws EmptyElement if an edge's element has no points.
double loss_con(const BodyPose& pose, const Skeleton& skel, const ContactGraph& graph,
                std::span<const SceneElement> elements);
double loss_prior(const BodyPose& pose, const Skeleton& skel, const PriorConfig& prior);
double loss_prior(const BodyPose& pose, const Skeleton& skel);

LossTerms total_loss(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud,
                     const ContactGraph& graph, std::span<const SceneElement> elements, const LossWeights& w);

/// Gradient of total_loss restricted to the free parameters, in layout order.
/// Throws Numeric when the loss is not finite.
std::vector<double> gradient(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud,
                             const ContactGraph& graph, std::span<const SceneElement> elements,
                             const LossWeights& w, const ParamMask& mask);

}  // namespace hsi
