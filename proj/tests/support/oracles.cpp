#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {

Eigen::Matrix4d homogeneous(const Eigen::Matrix3d& r, const Vec3& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

Eigen::Matrix3d angle_axis(const Vec3& w) {
  const double n = w.norm();
  if (n == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(n, w / n).toRotationMatrix();
}

const hsi::SceneElement* find(std::span<const hsi::SceneElement> elements, const std::string& id) {
  for (const auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

std::vector<Vec3> zone_samples(const hsi::Skeleton& skel, const hsi::PosedBody& posed, const std::string& part) {
  const int p = skel.part_index(part);
  std::vector<Vec3> out;
  for (std::size_t i : hsi::contact_zone_indices(skel, p)) out.push_back(posed.surface_samples[p][i]);
  return out;
}

std::optional<double> mean_edges(const hsi::Skeleton& skel, const hsi::PosedBody& posed, const hsi::ContactGraph& g,
                                 std::span<const hsi::SceneElement> elements, bool functional) {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : g.edges) {
    const auto* node = g.scene_node(e.element);
    const bool is_functional = node && node->role == hsi::ElementRole::Functional;
    if (is_functional != functional) continue;
    if (functional && !hsi::is_hand_related_part(e.part)) continue;
    sum += edge_chamfer(skel, posed, e, elements);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace

std::vector<Eigen::Matrix4d> fk_chain(const hsi::Skeleton& skel, const hsi::BodyPose& pose) {
  const std::size_t n = skel.joints.size();
  std::vector<Eigen::Matrix4d> world(n);
  const Eigen::Matrix3d root = Eigen::AngleAxisd(pose.phi.z(), Vec3::UnitZ()).toRotationMatrix() *
                               angle_axis(Vec3(pose.phi.x(), pose.phi.y(), 0.0));
  world[0] = homogeneous(Eigen::Matrix3d::Identity(), pose.r) *
             homogeneous(Eigen::Matrix3d::Identity(), root * ((1.0 + pose.beta[0]) * skel.joints[0].offset)) *
             homogeneous(root, Vec3::Zero());
  for (std::size_t j = 1; j < n; ++j) {
    const Vec3 off = (1.0 + pose.beta[j]) * skel.joints[j].offset;
    world[j] = world[skel.joints[j].parent] * homogeneous(Eigen::Matrix3d::Identity(), off) *
               homogeneous(angle_axis(pose.joint_rotation(static_cast<int>(j))), Vec3::Zero());
  }
  return world;
}

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return a + t * ab;
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) { return (p - closest_on_segment(p, a, b)).norm(); }

double sdf(const Vec3& p, const hsi::PosedBody& posed) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : posed.capsules_world) best = std::min(best, segment_distance(p, c.a, c.b) - c.radius);
  return best;
}

double loss_col(const hsi::PosedBody& posed, const hsi::PointCloud& cloud) {
  double sum = 0.0;
  for (const auto& p : cloud.points) sum += std::max(0.0, -oracle::sdf(p, posed));
  return sum;
}

double chamfer(std::span<const Vec3> samples, std::span<const Vec3> targets) {
  double sum = 0.0;
  for (const auto& s : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : targets) best = std::min(best, (s - t).squaredNorm());
    sum += best;
  }
  return sum / static_cast<double>(samples.size());
}

double edge_chamfer(const hsi::Skeleton& skel, const hsi::PosedBody& posed, const hsi::ContactEdge& e,
                    std::span<const hsi::SceneElement> elements) {
  const auto* el = find(elements, e.element);
  const auto samples = zone_samples(skel, posed, e.part);
  return chamfer(samples, el->points.points);
}

double loss_con(const hsi::Skeleton& skel, const hsi::PosedBody& posed, const hsi::ContactGraph& g,
                std::span<const hsi::SceneElement> elements) {
  double sum = 0.0;
  for (const auto& e : g.edges) sum += edge_chamfer(skel, posed, e, elements);
  return sum;
}

double ncs(const hsi::PosedBody& posed, const hsi::PointCloud& cloud) {
  std::size_t ok = 0;
  for (const auto& p : cloud.points)
    if (oracle::sdf(p, posed) >= 0.0) ++ok;
  return static_cast<double>(ok) / static_cast<double>(cloud.size());
}

std::optional<double> nfcd(const hsi::Skeleton& skel, const hsi::PosedBody& posed, const hsi::ContactGraph& g,
                           std::span<const hsi::SceneElement> elements) {
  return mean_edges(skel, posed, g, elements, false);
}

std::optional<double> fcd(const hsi::Skeleton& skel, const hsi::PosedBody& posed, const hsi::ContactGraph& g,
                          std::span<const hsi::SceneElement> elements) {
  return mean_edges(skel, posed, g, elements, true);
}

double kink_margin(const hsi::Skeleton& skel, const hsi::PosedBody& posed, const hsi::PointCloud& cloud,
                   const hsi::ContactGraph& g, std::span<const hsi::SceneElement> elements) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& p : cloud.points) {
    // capsules meeting at a shared joint center with equal radii give the
    // same distance function there, so such a tie is not a kink
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1, axis_radius = 0.0;
    Vec3 q1 = Vec3::Zero();
    for (const auto& c : posed.capsules_world) {
      const Vec3 q = closest_on_segment(p, c.a, c.b);
      const double d = (p - q).norm() - c.radius;
      if (d < d1) {
        if (!((q - q1).norm() < 1e-12 && std::abs(d - d1) < 1e-12)) d2 = d1;
        d1 = d;
        q1 = q;
        axis_radius = c.radius;
      } else if (d < d2 && !((q - q1).norm() < 1e-12 && std::abs(d - d1) < 1e-12)) {
        d2 = d;
      }
    }
    margin = std::min(margin, std::abs(d1));
    if (d1 < 0.0) margin = std::min({margin, d2 - d1, d1 + axis_radius});
  }
  for (const auto& e : g.edges) {
    const auto* el = find(elements, e.element);
    for (const auto& s : zone_samples(skel, posed, e.part)) {
      double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
      for (const auto& t : el->points.points) {
        const double d = (s - t).norm();
        if (d < d1) {
          d2 = d1;
          d1 = d;
        } else if (d < d2) {
          d2 = d;
        }
      }
      margin = std::min(margin, d2 - d1);
    }
  }
  return margin;
}

FdCheck finite_difference(const hsi::Objective& obj, const hsi::BodyPose& pose, const hsi::ParamMask& mask,
                          double h, double floor) {
  std::vector<double> grad;
  obj.evaluate(pose, mask, grad);
  const std::vector<double> x = hsi::pack_parameters(pose);
  FdCheck out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    std::vector<double> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    hsi::BodyPose pp = pose, pm = pose;
    hsi::unpack_parameters(xp, pp);
    hsi::unpack_parameters(xm, pm);
    const double fd = (obj.evaluate(pp).total - obj.evaluate(pm).total) / (2.0 * h);
    const double rel = std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), floor});
    if (rel > out.worst_rel) {
      out.worst_rel = rel;
      out.worst_index = static_cast<int>(i);
    }
  }
  return out;
}

}  // namespace oracle
