#include "hsi/skeleton.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "hsi/error.hpp"
#include "json_util.hpp"

using nlohmann::json;

namespace hsi {
namespace {

const std::array<std::string, 25> kVocabulary = {
    "head",
    "left_upper_arm", "right_upper_arm",
    "left_forearm", "right_forearm",
    "left_palm", "left_thumb", "left_index_finger", "left_middle_finger", "left_ring_finger",
    "left_pinky_finger",
    "right_palm", "right_thumb", "right_index_finger", "right_middle_finger", "right_ring_finger",
    "right_pinky_finger",
    "back", "buttocks",
    "left_thigh", "right_thigh",
    "left_calf", "right_calf",
    "left_foot", "right_foot",
};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string_view strip_side(std::string_view part) {
  if (starts_with(part, "left_")) return part.substr(5);
  if (starts_with(part, "right_")) return part.substr(6);
  return part;
}

}  // namespace

std::span<const std::string> part_vocabulary() { return kVocabulary; }

bool is_part_name(std::string_view name) {
  return std::find(kVocabulary.begin(), kVocabulary.end(), name) != kVocabulary.end();
}

std::string mirror_part(std::string_view part) {
  if (!is_part_name(part)) throw Error(ErrorKind::Vocabulary, "unknown body part '" + std::string(part) + "'");
  if (starts_with(part, "left_")) return "right_" + std::string(part.substr(5));
  if (starts_with(part, "right_")) return "left_" + std::string(part.substr(6));
  return std::string(part);
}

bool is_hand_part(std::string_view part) {
  if (!is_part_name(part)) return false;
  const auto base = strip_side(part);
  return base == "palm" || base == "thumb" || base.ends_with("_finger");
}

bool is_hand_related_part(std::string_view part) {
  return is_hand_part(part) || (is_part_name(part) && strip_side(part) == "forearm");
}

bool is_left_part(std::string_view part) { return starts_with(part, "left_"); }
bool is_right_part(std::string_view part) { return starts_with(part, "right_"); }
bool is_foot_part(std::string_view part) { return part == "left_foot" || part == "right_foot"; }

int Skeleton::joint_index(std::string_view name) const {
  for (std::size_t i = 0; i < joints.size(); ++i)
    if (joints[i].name == name) return static_cast<int>(i);
  throw Error(ErrorKind::Input, "unknown joint '" + std::string(name) + "'");
}

int Skeleton::part_index(std::string_view name) const {
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (parts[i].name == name) return static_cast<int>(i);
  throw Error(ErrorKind::Vocabulary, "unknown body part '" + std::string(name) + "'");
}

std::size_t Skeleton::sample_count() const {
  std::size_t n = 0;
  for (const auto& p : parts) n += p.anchors.size();
  return n;
}

void Skeleton::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Input, "skeleton: " + msg); };
  if (joints.empty()) fail("no joints");
  if (joints[0].parent != -1) fail("root joint must have no parent");
  for (std::size_t i = 1; i < joints.size(); ++i)
    if (joints[i].parent < 0 || joints[i].parent >= static_cast<int>(i))
      fail("joint '" + joints[i].name + "' breaks topological order");
  for (const auto& j : joints)
    if (!j.offset.allFinite() || !(j.limit > 0.0)) fail("joint '" + j.name + "' has invalid offset or limit");
  for (const auto& b : bones) {
    if (b.joint < 0 || b.joint >= static_cast<int>(joints.size())) fail("bone references a missing joint");
    if (b.child >= 0 && (b.child >= static_cast<int>(joints.size()) || joints[b.child].parent != b.joint))
      fail("bone child must be a direct child of its joint");
    if (!(b.radius > 0.0)) fail("capsule radii must be positive");
  }
  if (parts.size() != kVocabulary.size()) fail("part table must cover the vocabulary exactly");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].name != kVocabulary[i]) fail("part table out of canonical order at '" + parts[i].name + "'");
    if (parts[i].anchors.empty()) fail("part '" + parts[i].name + "' has no anchors");
    for (const auto& a : parts[i].anchors) {
      if (a.bone < 0 || a.bone >= static_cast<int>(bones.size())) fail("anchor references a missing bone");
      if (a.axial < 0.0 || a.axial > 1.0) fail("anchor axial fraction outside [0, 1]");
      if (std::abs(a.radial.norm() - 1.0) > 1e-9) fail("anchor radial direction is not unit length");
    }
  }
}

// --- default asset -----------------------------------------------------------

namespace {

struct Builder {
  Skeleton s;

  int joint(const std::string& name, int parent, Vec3 offset, double limit) {
    s.joints.push_back({name, parent, offset, limit});
    return static_cast<int>(s.joints.size()) - 1;
  }
  int bone_to(int j, int child, double radius, Vec3 start = Vec3::Zero()) {
    s.bones.push_back({j, child, start, Vec3::Zero(), radius});
    return static_cast<int>(s.bones.size()) - 1;
  }
  int bone_tip(int j, Vec3 start, Vec3 tip, double radius) {
    s.bones.push_back({j, -1, start, tip, radius});
    return static_cast<int>(s.bones.size()) - 1;
  }
  Vec3 axis(int b) const {
    const Bone& bone = s.bones[b];
    const Vec3 end = bone.child >= 0 ? s.joints[bone.child].offset : bone.tip;
    return (end - bone.start).normalized();
  }

  // Grid of anchors: `axial.size()` rings, each spanning the given angles
  // (radians) around `zero_dir` projected perpendicular to the bone axis.
  void ring(std::vector<SampleAnchor>& out, int b, const std::vector<double>& axial,
            const std::vector<double>& angles, Vec3 zero_dir) const {
    const Vec3 a = axis(b);
    Vec3 d0 = zero_dir - zero_dir.dot(a) * a;
    d0.normalize();
    const Vec3 d1 = a.cross(d0);
    for (double t : axial)
      for (double ang : angles) out.push_back({b, t, (std::cos(ang) * d0 + std::sin(ang) * d1).normalized()});
  }
};

std::vector<double> even(int n, double lo = 0.0, double hi = 1.0) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * (k + 0.5) / n);
  return v;
}

std::vector<double> full_circle(int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(2.0 * std::numbers::pi * k / n);
  return v;
}

std::vector<double> degrees(std::initializer_list<double> d) {
  std::vector<double> v;
  for (double x : d) v.push_back(x * std::numbers::pi / 180.0);
  return v;
}

}  // namespace

Skeleton default_skeleton() {
  Builder b;
  b.s.version = "capsule-skeleton-v1";
  const double arm_limit = 2.6, spine_limit = 0.9, leg_limit = 2.4, hand_limit = 1.8;

  // Body joints in SMPL-X order.
  const int pelvis = b.joint("pelvis", -1, {0.0, 0.0, 0.95}, 3.14159);
  const int lhip = b.joint("left_hip", pelvis, {-0.09, 0.0, -0.07}, leg_limit);
  const int rhip = b.joint("right_hip", pelvis, {0.09, 0.0, -0.07}, leg_limit);
  const int spine1 = b.joint("spine1", pelvis, {0.0, -0.01, 0.10}, spine_limit);
  const int lknee = b.joint("left_knee", lhip, {0.0, 0.0, -0.40}, leg_limit);
  const int rknee = b.joint("right_knee", rhip, {0.0, 0.0, -0.40}, leg_limit);
  const int spine2 = b.joint("spine2", spine1, {0.0, 0.0, 0.14}, spine_limit);
  const int lankle = b.joint("left_ankle", lknee, {0.0, 0.0, -0.40}, 1.2);
  const int rankle = b.joint("right_ankle", rknee, {0.0, 0.0, -0.40}, 1.2);
  const int spine3 = b.joint("spine3", spine2, {0.0, 0.0, 0.06}, spine_limit);
  b.joint("left_foot", lankle, {0.0, 0.13, -0.045}, 1.0);
  b.joint("right_foot", rankle, {0.0, 0.13, -0.045}, 1.0);
  const int neck = b.joint("neck", spine3, {0.0, 0.0, 0.21}, 1.2);
  const int lcollar = b.joint("left_collar", spine3, {-0.07, 0.0, 0.13}, 0.8);
  const int rcollar = b.joint("right_collar", spine3, {0.07, 0.0, 0.13}, 0.8);
  const int head = b.joint("head", neck, {0.0, 0.01, 0.09}, 1.2);
  const int lshoulder = b.joint("left_shoulder", lcollar, {-0.11, 0.0, 0.02}, arm_limit);
  const int rshoulder = b.joint("right_shoulder", rcollar, {0.11, 0.0, 0.02}, arm_limit);
  const int lelbow = b.joint("left_elbow", lshoulder, {-0.27, 0.0, 0.0}, arm_limit);
  const int relbow = b.joint("right_elbow", rshoulder, {0.27, 0.0, 0.0}, arm_limit);
  const int lwrist = b.joint("left_wrist", lelbow, {-0.25, 0.0, 0.0}, 1.6);
  const int rwrist = b.joint("right_wrist", relbow, {0.25, 0.0, 0.0}, 1.6);

  // Fingers: base offset from the wrist, two phalanx offsets, tip, radius.
  struct Finger {
    const char* name;
    Vec3 base, mid, distal, tip;
    double radius;
  };
  const std::array<Finger, 5> straight = {{
      {"index", {-0.090, 0.025, 0.0}, {-0.035, 0.0, 0.0}, {-0.025, 0.0, 0.0}, {-0.022, 0.0, 0.0}, 0.009},
      {"middle", {-0.092, 0.008, 0.0}, {-0.038, 0.0, 0.0}, {-0.027, 0.0, 0.0}, {-0.024, 0.0, 0.0}, 0.009},
      {"pinky", {-0.080, -0.030, 0.0}, {-0.025, 0.0, 0.0}, {-0.018, 0.0, 0.0}, {-0.018, 0.0, 0.0}, 0.008},
      {"ring", {-0.088, -0.012, 0.0}, {-0.033, 0.0, 0.0}, {-0.024, 0.0, 0.0}, {-0.022, 0.0, 0.0}, 0.009},
      {"thumb", {-0.025, 0.035, -0.012}, {-0.025, 0.020, 0.0}, {-0.022, 0.016, 0.0}, {-0.020, 0.014, 0.0}, 0.011},
  }};
  // Relaxed hand: each phalanx bends further towards the palm (left-hand frame).
  const std::array<double, 3> curl = {0.35, 0.70, 0.95};
  auto bend = [](const Vec3& v, double angle) { return Vec3(so3_exp(Vec3(0.0, -angle, 0.0)) * v); };
  std::array<Finger, 5> fingers = straight;
  for (std::size_t f = 0; f + 1 < fingers.size(); ++f) {
    fingers[f].mid = bend(fingers[f].mid, curl[0]);
    fingers[f].distal = bend(fingers[f].distal, curl[1]);
    fingers[f].tip = bend(fingers[f].tip, curl[2]);
  }
  const Vec3 flip(-1.0, 1.0, 1.0);
  std::array<std::array<int, 3>, 5> lfj{}, rfj{};
  for (int side = 0; side < 2; ++side) {
    const int wrist = side == 0 ? lwrist : rwrist;
    const std::string prefix = side == 0 ? "left_" : "right_";
    auto& fj = side == 0 ? lfj : rfj;
    for (std::size_t f = 0; f < fingers.size(); ++f) {
      const auto& fd = fingers[f];
      auto m = [&](const Vec3& v) { return side == 0 ? v : Vec3(v.cwiseProduct(flip)); };
      fj[f][0] = b.joint(prefix + fd.name + "1", wrist, m(fd.base), hand_limit);
      fj[f][1] = b.joint(prefix + fd.name + "2", fj[f][0], m(fd.mid), hand_limit);
      fj[f][2] = b.joint(prefix + fd.name + "3", fj[f][1], m(fd.distal), hand_limit);
    }
  }

  // Capsules.
  const int b_pelvis = b.bone_tip(pelvis, {-0.08, -0.02, -0.05}, {0.08, -0.02, -0.05}, 0.09);
  const int b_lower_back = b.bone_to(pelvis, spine1, 0.10);
  const int b_spine = b.bone_to(spine1, spine2, 0.11);
  const int b_chest = b.bone_to(spine2, spine3, 0.12);
  const int b_upper_chest = b.bone_tip(spine3, {-0.08, 0.0, 0.08}, {0.08, 0.0, 0.08}, 0.10);
  const int b_neck = b.bone_to(neck, head, 0.05);
  const int b_head = b.bone_tip(head, {0.0, 0.01, 0.03}, {0.0, 0.01, 0.14}, 0.085);
  b.bone_to(lcollar, lshoulder, 0.05);
  b.bone_to(rcollar, rshoulder, 0.05);
  const int b_lupper = b.bone_to(lshoulder, lelbow, 0.045);
  const int b_rupper = b.bone_to(rshoulder, relbow, 0.045);
  const int b_lfore = b.bone_to(lelbow, lwrist, 0.038);
  const int b_rfore = b.bone_to(relbow, rwrist, 0.038);
  const int b_lpalm = b.bone_tip(lwrist, Vec3::Zero(), {-0.085, 0.0, 0.0}, 0.025);
  const int b_rpalm = b.bone_tip(rwrist, Vec3::Zero(), {0.085, 0.0, 0.0}, 0.025);
  std::array<std::array<int, 3>, 5> lfb{}, rfb{};
  for (int side = 0; side < 2; ++side) {
    const auto& fj = side == 0 ? lfj : rfj;
    auto& fb = side == 0 ? lfb : rfb;
    for (std::size_t f = 0; f < fingers.size(); ++f) {
      const double r = fingers[f].radius;
      const Vec3 tip = side == 0 ? fingers[f].tip : Vec3(fingers[f].tip.cwiseProduct(flip));
      fb[f][0] = b.bone_to(fj[f][0], fj[f][1], r);
      fb[f][1] = b.bone_to(fj[f][1], fj[f][2], r);
      fb[f][2] = b.bone_tip(fj[f][2], Vec3::Zero(), tip, r);
    }
  }
  const int b_lthigh = b.bone_to(lhip, lknee, 0.075);
  const int b_rthigh = b.bone_to(rhip, rknee, 0.075);
  const int b_lcalf = b.bone_to(lknee, lankle, 0.05);
  const int b_rcalf = b.bone_to(rknee, rankle, 0.05);
  const int b_lfoot = b.bone_tip(lankle, {0.0, -0.05, -0.045}, {0.0, 0.18, -0.045}, 0.035);
  const int b_rfoot = b.bone_tip(rankle, {0.0, -0.05, -0.045}, {0.0, 0.18, -0.045}, 0.035);

  // Part table in vocabulary order.
  const Vec3 down(0.0, 0.0, -1.0), fwd(0.0, 1.0, 0.0);
  const auto circle8 = full_circle(8);
  const auto sole = degrees({-60.0, -20.0, 20.0, 60.0});
  const auto pad3 = degrees({-40.0, 0.0, 40.0});
  const auto pad2 = degrees({-30.0, 30.0});

  auto part = [&](const std::string& name) -> std::vector<SampleAnchor>& {
    b.s.parts.push_back({name, {}});
    return b.s.parts.back().anchors;
  };
  {
    auto& a = part("head");
    b.ring(a, b_head, even(4), full_circle(6), fwd);
    b.ring(a, b_neck, {0.5}, circle8, fwd);
  }
  b.ring(part("left_upper_arm"), b_lupper, even(4), circle8, down);
  b.ring(part("right_upper_arm"), b_rupper, even(4), circle8, down);
  b.ring(part("left_forearm"), b_lfore, even(4), circle8, down);
  b.ring(part("right_forearm"), b_rfore, even(4), circle8, down);
  const std::array<const char*, 5> finger_parts = {"thumb", "index_finger", "middle_finger", "ring_finger",
                                                   "pinky_finger"};
  const std::array<int, 5> finger_slot = {4, 0, 1, 3, 2};  // vocabulary order -> `fingers` index
  for (int side = 0; side < 2; ++side) {
    const std::string prefix = side == 0 ? "left_" : "right_";
    b.ring(part(prefix + "palm"), side == 0 ? b_lpalm : b_rpalm, even(8), sole, down);
    const auto& fb = side == 0 ? lfb : rfb;
    for (std::size_t k = 0; k < finger_parts.size(); ++k) {
      auto& a = part(prefix + finger_parts[k]);
      const auto& bones = fb[finger_slot[k]];
      b.ring(a, bones[0], {0.5}, pad3, down);
      b.ring(a, bones[1], {0.5}, pad3, down);
      b.ring(a, bones[2], {0.6}, pad2, down);
    }
  }
  {
    auto& a = part("back");
    for (int bone : {b_lower_back, b_spine, b_chest, b_upper_chest}) b.ring(a, bone, {0.5}, circle8, fwd);
  }
  b.ring(part("buttocks"), b_pelvis, even(4), circle8, down);
  b.ring(part("left_thigh"), b_lthigh, even(4), circle8, fwd);
  b.ring(part("right_thigh"), b_rthigh, even(4), circle8, fwd);
  b.ring(part("left_calf"), b_lcalf, even(4), circle8, fwd);
  b.ring(part("right_calf"), b_rcalf, even(4), circle8, fwd);
  b.ring(part("left_foot"), b_lfoot, even(8), sole, down);
  b.ring(part("right_foot"), b_rfoot, even(8), sole, down);

  b.s.validate();
  return b.s;
}

std::vector<int> arm_joints(const Skeleton& skel) {
  std::vector<int> out;
  for (const char* n : {"left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist"})
    out.push_back(skel.joint_index(n));
  return out;
}

std::vector<int> ankle_joints(const Skeleton& skel) {
  return {skel.joint_index("left_ankle"), skel.joint_index("right_ankle")};
}

// --- json ----------------------------------------------------------------------

Skeleton load_skeleton(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  Skeleton s;
  try {
    s.version = j.at("version").get<std::string>();
    for (const auto& jj : j.at("joints")) {
      Joint joint;
      joint.name = jj.at("name").get<std::string>();
      joint.parent = jj.at("parent").is_null() ? -1 : s.joint_index(jj.at("parent").get<std::string>());
      joint.offset = vec3_from_json(jj.at("offset"));
      joint.limit = jj.at("limit").get<double>();
      s.joints.push_back(std::move(joint));
    }
    for (const auto& jb : j.at("bones")) {
      Bone bone;
      bone.joint = s.joint_index(jb.at("joint").get<std::string>());
      bone.child = jb.at("child").is_null() ? -1 : s.joint_index(jb.at("child").get<std::string>());
      bone.start = vec3_from_json(jb.at("start"));
      if (bone.child < 0) bone.tip = vec3_from_json(jb.at("tip"));
      bone.radius = jb.at("radius").get<double>();
      s.bones.push_back(bone);
    }
    for (const auto& jp : j.at("parts")) {
      BodyPart part{jp.at("name").get<std::string>(), {}};
      for (const auto& ja : jp.at("anchors"))
        part.anchors.push_back({ja.at("bone").get<int>(), ja.at("axial").get<double>(),
                                vec3_from_json(ja.at("radial"))});
      s.parts.push_back(std::move(part));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

void save_skeleton(const std::filesystem::path& path, const Skeleton& skel) {
  json joints = json::array(), bones = json::array(), parts = json::array();
  for (const auto& jt : skel.joints)
    joints.push_back({{"name", jt.name},
                      {"parent", jt.parent < 0 ? json(nullptr) : json(skel.joints[jt.parent].name)},
                      {"offset", vec3_to_json(jt.offset)},
                      {"limit", jt.limit}});
  for (const auto& bn : skel.bones) {
    json jb{{"joint", skel.joints[bn.joint].name},
            {"child", bn.child < 0 ? json(nullptr) : json(skel.joints[bn.child].name)},
            {"start", vec3_to_json(bn.start)},
            {"radius", bn.radius}};
    if (bn.child < 0) jb["tip"] = vec3_to_json(bn.tip);
    bones.push_back(std::move(jb));
  }
  for (const auto& p : skel.parts) {
    json anchors = json::array();
    for (const auto& a : p.anchors)
      anchors.push_back({{"bone", a.bone}, {"axial", a.axial}, {"radial", vec3_to_json(a.radial)}});
    parts.push_back({{"name", p.name}, {"anchors", anchors}});
  }
  write_json_file(path, {{"version", skel.version}, {"joints", joints}, {"bones", bones}, {"parts", parts}});
}

}  // namespace hsi
