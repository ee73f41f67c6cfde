#include "hsi/losses.hpp"

#include <cmath>
#include <limits>

#include "hsi/error.hpp"

namespace hsi {

void LossWeights::validate() const {
  for (double w : {col, con, prior})
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorKind::Input, "loss weights must be finite and >= 0");
}

PriorConfig PriorConfig::defaults(const Skeleton&) {
  PriorConfig p;
  p.weights.assign(kNumBodyJoints - 1, 1.0);
  return p;
}

// --- parameters ------------------------------------------------------------------

std::vector<double> pack_parameters(const BodyPose& pose) {
  std::vector<double> x;
  x.reserve(kParamJoints + 3 * (pose.theta_b.size() + pose.theta_h.size()));
  x.insert(x.end(), {pose.r.x(), pose.r.y(), pose.r.z(), pose.phi.z(), pose.phi.x(), pose.phi.y()});
  for (const auto& t : pose.theta_b) x.insert(x.end(), {t.x(), t.y(), t.z()});
  for (const auto& t : pose.theta_h) x.insert(x.end(), {t.x(), t.y(), t.z()});
  return x;
}

void unpack_parameters(std::span<const double> x, BodyPose& pose) {
  const std::size_t expected = kParamJoints + 3 * (pose.theta_b.size() + pose.theta_h.size());
  if (x.size() != expected) throw Error(ErrorKind::Input, "parameter vector has the wrong size");
  pose.r = Vec3(x[0], x[1], x[2]);
  pose.phi = Vec3(x[4], x[5], x[3]);
  std::size_t k = kParamJoints;
  for (auto& t : pose.theta_b) t = Vec3(x[k], x[k + 1], x[k + 2]), k += 3;
  for (auto& t : pose.theta_h) t = Vec3(x[k], x[k + 1], x[k + 2]), k += 3;
}

ParamMask ParamMask::all(const Skeleton& skel) {
  ParamMask m(skel);
  m.free_.assign(m.free_.size(), true);
  return m;
}

ParamMask& ParamMask::translation(bool on) {
  for (int i = 0; i < 3; ++i) free_[kParamTranslation + i] = on;
  return *this;
}

ParamMask& ParamMask::yaw(bool on) {
  free_[kParamYaw] = on;
  return *this;
}

ParamMask& ParamMask::tilt(bool on) {
  free_[kParamTilt] = free_[kParamTilt + 1] = on;
  return *this;
}

ParamMask& ParamMask::joint(int j, bool on) {
  if (j <= 0) throw Error(ErrorKind::Input, "the root joint has no pose parameters");
  for (int i = 0; i < 3; ++i) free_.at(joint_param_offset(j) + i) = on;
  return *this;
}

std::size_t ParamMask::count() const {
  std::size_t n = 0;
  for (bool b : free_) n += b ? 1 : 0;
  return n;
}

// --- objective -------------------------------------------------------------------

namespace {

const SceneElement& find_element(std::span<const SceneElement> elements, const std::string& id) {
  for (const auto& e : elements)
    if (e.id == id) return e;
  throw Error(ErrorKind::Input, "contact edge references unknown element '" + id + "'");
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void add(const WorldCapsule& c) {
    lo = lo.cwiseMin(c.a.cwiseMin(c.b) - Vec3::Constant(c.radius));
    hi = hi.cwiseMax(c.a.cwiseMax(c.b) + Vec3::Constant(c.radius));
  }
  bool contains(const Vec3& p) const {
    return (p.array() > lo.array()).all() && (p.array() < hi.array()).all();
  }
};

}  // namespace

Objective::Objective(const Skeleton& skel, const std::vector<double>& beta, const PointCloud& cloud,
                     const ContactGraph& graph, std::span<const SceneElement> elements, LossWeights weights,
                     PriorConfig prior)
    : skel_(skel), geom_(resolve_geometry(skel, beta)), cloud_(cloud), weights_(weights), prior_(std::move(prior)) {
  weights_.validate();
  if (prior_.weights.size() != kNumBodyJoints - 1)
    throw Error(ErrorKind::Input, "prior weights must cover the 21 body joints");
  std::vector<std::pair<std::string, std::shared_ptr<const KdTree>>> trees;
  for (const auto& e : graph.edges) {
    EdgeTerm term;
    term.part = skel_.part_index(e.part);
    term.samples = contact_zone_indices(skel_, term.part);
    for (const auto& [id, tree] : trees)
      if (id == e.element) term.tree = tree;
    if (!term.tree) {
      const SceneElement& el = find_element(elements, e.element);
      if (el.points.empty())
        throw Error(ErrorKind::EmptyElement, "element '" + el.id + "' has no points");
      term.tree = std::make_shared<const KdTree>(el.points.points);
      trees.emplace_back(e.element, term.tree);
    }
    edges_.push_back(std::move(term));
  }
}

LossTerms Objective::evaluate(const BodyPose& pose) const { return run(pose, nullptr, nullptr); }

LossTerms Objective::evaluate(const BodyPose& pose, const ParamMask& mask, std::vector<double>& grad) const {
  return run(pose, &mask, &grad);
}

std::vector<double> Objective::edge_terms(const BodyPose& pose) const {
  const PosedBody posed = forward_kinematics(skel_, geom_, pose);
  std::vector<double> out;
  for (const auto& e : edges_) {
    double sum = 0.0;
    for (std::size_t i : e.samples) sum += e.tree->nearest(posed.surface_samples[e.part][i]).squared_distance;
    out.push_back(sum / static_cast<double>(e.samples.size()));
  }
  return out;
}

LossTerms Objective::run(const BodyPose& pose, const ParamMask* mask, std::vector<double>* grad) const {
  const std::size_t nj = skel_.joints.size();
  const PosedBody posed = forward_kinematics(skel_, geom_, pose);
  const bool want_grad = grad != nullptr;

  // Per-joint sums over attached points y with loss gradient g:
  // force = sum g, moment = sum y x g.
  std::vector<Vec3> force, moment;
  if (want_grad) {
    force.assign(nj, Vec3::Zero());
    moment.assign(nj, Vec3::Zero());
  }

  LossTerms terms;

  // Collision.
  Aabb box;
  for (const auto& c : posed.capsules_world) box.add(c);
  for (const Vec3& p : cloud_.points) {
    if (!box.contains(p)) continue;
    const SdfQuery q = sdf_query(p, posed);
    if (!(q.value < 0.0)) continue;
    terms.col += -q.value;
    if (!want_grad || weights_.col == 0.0) continue;
    const WorldCapsule& cap = posed.capsules_world[q.capsule];
    const Vec3 c = cap.a + q.t * (cap.b - cap.a);
    const Vec3 diff = p - c;
    const double dist = diff.norm();
    if (dist == 0.0) continue;  // on the axis: no unique direction
    const Vec3 n = diff / dist;
    const Vec3 ga = weights_.col * (1.0 - q.t) * n;
    const Vec3 gb = weights_.col * q.t * n;
    const int j = geom_.capsules[q.capsule].joint;
    force[j] += ga + gb;
    moment[j] += cap.a.cross(ga) + cap.b.cross(gb);
  }

  // Contact.
  for (const auto& e : edges_) {
    const double inv_n = 1.0 / static_cast<double>(e.samples.size());
    double sum = 0.0;
    for (std::size_t i : e.samples) {
      const Vec3& v = posed.surface_samples[e.part][i];
      const KdTree::Hit hit = e.tree->nearest(v);
      sum += hit.squared_distance;
      if (!want_grad || weights_.con == 0.0) continue;
      const Vec3 g = weights_.con * 2.0 * inv_n * (v - e.tree->point(hit.index));
      const int j = geom_.samples[e.part][i].joint;
      force[j] += g;
      moment[j] += v.cross(g);
    }
    terms.con += sum * inv_n;
  }

  // Prior.
  for (int j = 1; j < kNumBodyJoints; ++j) {
    const Vec3& th = pose.joint_rotation(j);
    const double n = th.norm();
    const double excess = n - skel_.joints[j].limit;
    terms.prior += prior_.weights[j - 1] * th.squaredNorm();
    if (excess > 0.0) terms.prior += prior_.barrier_weight * excess * excess;
  }

  terms.total = weights_.col * terms.col + weights_.con * terms.con + weights_.prior * terms.prior;
  if (!want_grad) return terms;
  if (!std::isfinite(terms.total)) throw Error(ErrorKind::Numeric, "total loss is not finite");

  grad->assign(parameter_count(skel_), 0.0);
  std::vector<double>& gr = *grad;

  // Accumulate subtree sums, leaves first (parents precede children).
  for (std::size_t j = nj - 1; j >= 1; --j) {
    const int p = skel_.joints[j].parent;
    force[p] += force[j];
    moment[p] += moment[j];
  }

  for (std::size_t j = 1; j < nj; ++j) {
    const int off = joint_param_offset(static_cast<int>(j));
    if (!(*mask)[off]) continue;
    const Rigid& frame = posed.joint_world[j];
    const Vec3 torque = moment[j] - frame.translation.cross(force[j]);
    const Vec3& th = pose.joint_rotation(static_cast<int>(j));
    Vec3 g = so3_right_jacobian(th).transpose() * (frame.rotation.transpose() * torque);
    if (static_cast<int>(j) < kNumBodyJoints && weights_.prior != 0.0) {
      const double n = th.norm();
      g += weights_.prior * 2.0 * prior_.weights[j - 1] * th;
      const double excess = n - skel_.joints[j].limit;
      if (excess > 0.0) g += weights_.prior * prior_.barrier_weight * 2.0 * excess * (th / n);
    }
    gr[off] = g.x();
    gr[off + 1] = g.y();
    gr[off + 2] = g.z();
  }

  // Root: every point moves with r; rotations pivot about r.
  const Vec3 root_torque = moment[0] - pose.r.cross(force[0]);
  for (int i = 0; i < 3; ++i)
    if ((*mask)[kParamTranslation + i]) gr[kParamTranslation + i] = force[0](i);
  if ((*mask)[kParamYaw]) gr[kParamYaw] = root_torque.z();
  if ((*mask)[kParamTilt] || (*mask)[kParamTilt + 1]) {
    const Vec3 tilt(pose.phi.x(), pose.phi.y(), 0.0);
    const Mat3 rot = root_rotation(pose.phi);
    const Vec3 g = so3_right_jacobian(tilt).transpose() * (rot.transpose() * root_torque);
    if ((*mask)[kParamTilt]) gr[kParamTilt] = g.x();
    if ((*mask)[kParamTilt + 1]) gr[kParamTilt + 1] = g.y();
  }
  for (double v : gr)
    if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, "gradient is not finite");
  return terms;
}

// --- free functions ----------------------------------------------------------------

double loss_col(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud) {
  const Objective obj(skel, pose.beta, cloud, {}, {}, {1.0, 0.0, 0.0}, PriorConfig::defaults(skel));
  return obj.evaluate(pose).col;
}

double loss_con(const BodyPose& pose, const Skeleton& skel, const ContactGraph& graph,
                std::span<const SceneElement> elements) {
  const Objective obj(skel, pose.beta, {}, graph, elements, {0.0, 1.0, 0.0}, PriorConfig::defaults(skel));
  return obj.evaluate(pose).con;
}

double loss_prior(const BodyPose& pose, const Skeleton& skel, const PriorConfig& prior) {
  const Objective obj(skel, pose.beta, {}, {}, {}, {0.0, 0.0, 1.0}, prior);
  return obj.evaluate(pose).prior;
}

double loss_prior(const BodyPose& pose, const Skeleton& skel) {
  return loss_prior(pose, skel, PriorConfig::defaults(skel));
}

LossTerms total_loss(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud,
                     const ContactGraph& graph, std::span<const SceneElement> elements, const LossWeights& w) {
  const Objective obj(skel, pose.beta, cloud, graph, elements, w, PriorConfig::defaults(skel));
  return obj.evaluate(pose);
}

std::vector<double> gradient(const BodyPose& pose, const Skeleton& skel, const PointCloud& cloud,
                             const ContactGraph& graph, std::span<const SceneElement> elements,
                             const LossWeights& w, const ParamMask& mask) {
  const Objective obj(skel, pose.beta, cloud, graph, elements, w, PriorConfig::defaults(skel));
  std::vector<double> full;
  obj.evaluate(pose, mask, full);
  std::vector<double> out;
  out.reserve(mask.count());
  for (std::size_t i = 0; i < full.size(); ++i)
    if (mask[i]) out.push_back(full[i]);
  return out;
}

}  // namespace hsi
