#include "hsi/body.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include "hsi/error.hpp"
#include "json_util.hpp"

using nlohmann::json;

namespace hsi {

BodyPose BodyPose::rest(const Skeleton& skel) {
  BodyPose p;
  p.beta.assign(skel.joints.size(), 0.0);
  p.theta_b.assign(kNumBodyJoints - 1, Vec3::Zero());
  p.theta_h.assign(skel.joints.size() - kNumBodyJoints, Vec3::Zero());
  return p;
}

const Vec3& BodyPose::joint_rotation(int joint) const {
  static const Vec3 kZero = Vec3::Zero();
  if (joint == 0) return kZero;
  if (joint < kNumBodyJoints) return theta_b[joint - 1];
  return theta_h[joint - kNumBodyJoints];
}

Vec3& BodyPose::joint_rotation(int joint) {
  if (joint <= 0) throw Error(ErrorKind::Input, "the root joint has no local rotation");
  if (joint < kNumBodyJoints) return theta_b[joint - 1];
  return theta_h[joint - kNumBodyJoints];
}

void BodyPose::validate(const Skeleton& skel) const {
  std::vector<std::string> bad;
  if (beta.size() != skel.joints.size()) bad.push_back("beta: expected " + std::to_string(skel.joints.size()) + " values");
  if (theta_b.size() != kNumBodyJoints - 1) bad.push_back("theta_b: expected " + std::to_string(kNumBodyJoints - 1) + " joints");
  if (theta_h.size() != skel.joints.size() - kNumBodyJoints)
    bad.push_back("theta_h: expected " + std::to_string(skel.joints.size() - kNumBodyJoints) + " joints");
  for (double b : beta)
    if (!std::isfinite(b) || b <= -1.0) {
      bad.push_back("beta: values must be finite and > -1");
      break;
    }
  if (!r.allFinite()) bad.push_back("r: non-finite");
  if (!phi.allFinite()) bad.push_back("phi: non-finite");
  auto check = [&](const std::vector<Vec3>& th, const char* name) {
    for (std::size_t i = 0; i < th.size(); ++i) {
      if (!th[i].allFinite()) {
        bad.push_back(std::string(name) + "[" + std::to_string(i) + "]: non-finite");
      } else if (th[i].norm() > std::numbers::pi + 1e-12) {
        bad.push_back(std::string(name) + "[" + std::to_string(i) + "]: rotation angle exceeds pi");
      }
    }
  };
  check(theta_b, "theta_b");
  check(theta_h, "theta_h");
  if (!bad.empty()) {
    std::string msg = "invalid body pose:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw Error(ErrorKind::Input, msg);
  }
}

Mat3 root_rotation(const Vec3& phi) { return rot_z(phi.z()) * so3_exp(Vec3(phi.x(), phi.y(), 0.0)); }

LocalGeometry resolve_geometry(const Skeleton& skel, const std::vector<double>& beta) {
  if (beta.size() != skel.joints.size()) throw Error(ErrorKind::Input, "beta size does not match the skeleton");
  LocalGeometry g;
  g.offsets.resize(skel.joints.size());
  for (std::size_t j = 0; j < skel.joints.size(); ++j) g.offsets[j] = (1.0 + beta[j]) * skel.joints[j].offset;
  for (const auto& bone : skel.bones) {
    const double s = 1.0 + beta[bone.joint];
    const Vec3 a = s * bone.start;
    const Vec3 b = bone.child >= 0 ? g.offsets[bone.child] : Vec3(s * bone.tip);
    g.capsules.push_back({bone.joint, a, b, bone.radius});
  }
  g.samples.resize(skel.parts.size());
  for (std::size_t p = 0; p < skel.parts.size(); ++p)
    for (const auto& anchor : skel.parts[p].anchors) {
      const auto& cap = g.capsules[anchor.bone];
      g.samples[p].push_back({cap.joint, cap.a + anchor.axial * (cap.b - cap.a) + cap.radius * anchor.radial});
    }
  return g;
}

PosedBody forward_kinematics(const Skeleton& skel, const BodyPose& pose) {
  pose.validate(skel);
  return forward_kinematics(skel, resolve_geometry(skel, pose.beta), pose);
}

PosedBody forward_kinematics(const Skeleton& skel, const LocalGeometry& geom, const BodyPose& pose) {
  const std::size_t n = skel.joints.size();
  PosedBody out;
  out.joint_world.resize(n);
  const Mat3 root = root_rotation(pose.phi);
  out.joint_world[0] = {root, pose.r + root * geom.offsets[0]};
  for (std::size_t j = 1; j < n; ++j) {
    const Rigid& parent = out.joint_world[skel.joints[j].parent];
    out.joint_world[j].rotation = parent.rotation * so3_exp(pose.joint_rotation(static_cast<int>(j)));
    out.joint_world[j].translation = parent.translation + parent.rotation * geom.offsets[j];
  }
  out.capsules_world.reserve(geom.capsules.size());
  for (const auto& c : geom.capsules) {
    const Rigid& f = out.joint_world[c.joint];
    out.capsules_world.push_back({f * c.a, f * c.b, c.radius});
  }
  out.surface_samples.resize(geom.samples.size());
  for (std::size_t p = 0; p < geom.samples.size(); ++p) {
    out.surface_samples[p].reserve(geom.samples[p].size());
    for (const auto& s : geom.samples[p]) out.surface_samples[p].push_back(out.joint_world[s.joint] * s.local);
  }
  return out;
}

SdfQuery sdf_query(const Vec3& p, const PosedBody& posed) {
  SdfQuery best{std::numeric_limits<double>::infinity(), -1, 0.0};
  for (std::size_t i = 0; i < posed.capsules_world.size(); ++i) {
    const auto& c = posed.capsules_world[i];
    const SegmentClosest cl = closest_on_segment(p, c.a, c.b);
    const double d = cl.distance - c.radius;
    if (d < best.value) best = {d, static_cast<int>(i), cl.t};
  }
  return best;
}

double sdf(const Vec3& p, const PosedBody& posed) { return sdf_query(p, posed).value; }

std::vector<std::size_t> contact_zone_indices(const Skeleton& skel, int part) {
  const auto& anchors = skel.parts.at(part).anchors;
  std::vector<std::size_t> idx;
  const bool foot = is_foot_part(skel.parts[part].name);
  for (std::size_t i = 0; i < anchors.size(); ++i)
    if (!foot || anchors[i].axial >= kToeAxial || anchors[i].axial <= kHeelAxial) idx.push_back(i);
  return idx;
}

std::vector<Vec3> part_samples(const Skeleton& skel, const PosedBody& posed, std::string_view part,
                               bool contact_zone) {
  const int p = skel.part_index(part);
  if (!contact_zone) return posed.surface_samples.at(p);
  std::vector<Vec3> out;
  for (std::size_t i : contact_zone_indices(skel, p)) out.push_back(posed.surface_samples[p][i]);
  return out;
}

// --- io --------------------------------------------------------------------------

namespace {

json vec3_list(const std::vector<Vec3>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(vec3_to_json(x));
  return a;
}

}  // namespace

void save_pose(const std::filesystem::path& path, const BodyPose& pose) {
  write_json_file(path, {{"beta", pose.beta},
                         {"r", vec3_to_json(pose.r)},
                         {"phi", vec3_to_json(pose.phi)},
                         {"theta_b", vec3_list(pose.theta_b)},
                         {"theta_h", vec3_list(pose.theta_h)}});
}

BodyPose load_pose(const std::filesystem::path& path, const Skeleton& skel) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw Error(ErrorKind::Input, path.string() + ": pose must be a JSON object");
  BodyPose pose;
  std::vector<std::string> bad;
  auto number = [&](const json& x, const std::string& field, double& out) {
    if (!x.is_number()) {
      bad.push_back(field + ": not a number");
      return;
    }
    out = x.get<double>();
  };
  auto vec3 = [&](const json& x, const std::string& field, Vec3& out) {
    if (!x.is_array() || x.size() != 3) {
      bad.push_back(field + ": expected 3 numbers");
      return;
    }
    for (int k = 0; k < 3; ++k) number(x[k], field + "[" + std::to_string(k) + "]", out(k));
  };
  auto vec3s = [&](const char* field, std::vector<Vec3>& out) {
    if (!j.contains(field) || !j[field].is_array()) {
      bad.push_back(std::string(field) + ": missing or not a list");
      return;
    }
    out.resize(j[field].size(), Vec3::Zero());
    for (std::size_t i = 0; i < out.size(); ++i)
      vec3(j[field][i], std::string(field) + "[" + std::to_string(i) + "]", out[i]);
  };

  if (!j.contains("beta") || !j["beta"].is_array()) {
    bad.push_back("beta: missing or not a list");
  } else {
    pose.beta.resize(j["beta"].size(), 0.0);
    for (std::size_t i = 0; i < pose.beta.size(); ++i) number(j["beta"][i], "beta[" + std::to_string(i) + "]", pose.beta[i]);
  }
  if (j.contains("r")) vec3(j["r"], "r", pose.r); else bad.push_back("r: missing");
  if (j.contains("phi")) vec3(j["phi"], "phi", pose.phi); else bad.push_back("phi: missing");
  vec3s("theta_b", pose.theta_b);
  vec3s("theta_h", pose.theta_h);
  if (!bad.empty()) {
    std::string msg = path.string() + ": invalid body pose:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw Error(ErrorKind::Input, msg);
  }
  pose.validate(skel);
  return pose;
}

void write_body_obj(const std::filesystem::path& path, const PosedBody& posed, int segments) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << std::setprecision(9);
  const int rings = segments / 2;  // per hemisphere
  std::size_t base = 1;
  for (const auto& c : posed.capsules_world) {
    Vec3 axis = c.b - c.a;
    const double len = axis.norm();
    axis = len > 0.0 ? Vec3(axis / len) : Vec3::UnitZ();
    const Vec3 helper = std::abs(axis.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    const Vec3 u = axis.cross(helper).normalized();
    const Vec3 v = axis.cross(u);
    // Latitude rings from the `a` pole to the `b` pole; the cylinder is the
    // gap between the two equators.
    std::vector<std::pair<Vec3, double>> lat;  // (center, ring radius)
    for (int k = 0; k <= rings; ++k) {
      const double ang = std::numbers::pi / 2.0 * (1.0 - double(k) / rings);
      lat.push_back({c.a - axis * (c.radius * std::sin(ang)), c.radius * std::cos(ang)});
    }
    for (int k = 0; k <= rings; ++k) {
      const double ang = std::numbers::pi / 2.0 * double(k) / rings;
      lat.push_back({c.b + axis * (c.radius * std::sin(ang)), c.radius * std::cos(ang)});
    }
    for (const auto& [center, rr] : lat)
      for (int s = 0; s < segments; ++s) {
        const double a = 2.0 * std::numbers::pi * s / segments;
        const Vec3 p = center + rr * (std::cos(a) * u + std::sin(a) * v);
        out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
      }
    for (std::size_t k = 0; k + 1 < lat.size(); ++k)
      for (int s = 0; s < segments; ++s) {
        const std::size_t i0 = base + k * segments + s;
        const std::size_t i1 = base + k * segments + (s + 1) % segments;
        const std::size_t j0 = i0 + segments, j1 = i1 + segments;
        out << "f " << i0 << ' ' << j0 << ' ' << j1 << '\n';
        out << "f " << i0 << ' ' << j1 << ' ' << i1 << '\n';
      }
    base += lat.size() * segments;
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

PointCloud samples_cloud(const PosedBody& posed) {
  PointCloud cloud;
  for (const auto& part : posed.surface_samples) cloud.points.insert(cloud.points.end(), part.begin(), part.end());
  return cloud;
}

}  // namespace hsi
