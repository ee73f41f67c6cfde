#include "hsi/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hsi/error.hpp"
#include "json_util.hpp"

namespace hsi {

using nlohmann::json;

void StageConfig::validate(const Skeleton& skel) const {
  if (iterations < 0) throw Error(ErrorKind::Input, "stage iterations must be >= 0");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0)
    throw Error(ErrorKind::Input, "stage learning rate must be finite and > 0");
  const int nj = static_cast<int>(skel.joints.size());
  for (int j : joints)
    if (j <= 0 || j >= nj) throw Error(ErrorKind::Input, "stage joint index out of range");
  for (const auto& [j, m] : lr_multipliers) {
    if (j <= 0 || j >= nj) throw Error(ErrorKind::Input, "learning-rate multiplier joint out of range");
    if (!std::isfinite(m) || m <= 0.0) throw Error(ErrorKind::Input, "learning-rate multiplier must be > 0");
  }
}

ParamMask StageConfig::mask(const Skeleton& skel) const {
  ParamMask m(skel);
  m.translation(translation).yaw(yaw);
  for (int j : joints) m.joint(j);
  return m;
}

RefineConfig RefineConfig::defaults(const Skeleton& skel) {
  RefineConfig c;
  c.prior = PriorConfig::defaults(skel);
  c.stage1.iterations = 400;
  c.stage1.learning_rate = 1e-2;
  c.stage1.yaw = true;
  c.stage1.joints = arm_joints(skel);
  c.stage1.use_prior = false;
  c.stage2.iterations = 200;
  c.stage2.learning_rate = 1e-2 / 5.0;
  for (int j = 1; j < static_cast<int>(skel.joints.size()); ++j) c.stage2.joints.push_back(j);
  for (int j : ankle_joints(skel)) c.stage2.lr_multipliers.emplace_back(j, 2.0);
  return c;
}

void RefineConfig::validate(const Skeleton& skel) const {
  stage1.validate(skel);
  stage2.validate(skel);
  weights.validate();
  if (prior.weights.size() != kNumBodyJoints - 1) throw Error(ErrorKind::Input, "prior needs 21 joint weights");
  if (!(safeguard_ratio > 1.0)) throw Error(ErrorKind::Input, "safeguard ratio must exceed 1");
  if (snapshot_interval < 0) throw Error(ErrorKind::Input, "snapshot interval must be >= 0");
}

// --- config json -----------------------------------------------------------------

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<int> joints_from_json(const json& j, const Skeleton& skel) {
  std::vector<int> out;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "all") {
      for (int i = 1; i < static_cast<int>(skel.joints.size()); ++i) out.push_back(i);
    } else if (s == "arms") {
      out = arm_joints(skel);
    } else if (s == "body") {
      for (int i = 1; i < kNumBodyJoints; ++i) out.push_back(i);
    } else {
      throw Error(ErrorKind::Input, "unknown joint set '" + s + "'");
    }
    return out;
  }
  for (const auto& e : j) out.push_back(skel.joint_index(e.get<std::string>()));
  return out;
}

void stage_from_json(const json& j, const Skeleton& skel, StageConfig& s) {
  read_if(j, "iterations", s.iterations);
  read_if(j, "learning_rate", s.learning_rate);
  read_if(j, "translation", s.translation);
  read_if(j, "yaw", s.yaw);
  read_if(j, "use_prior", s.use_prior);
  if (j.contains("joints")) s.joints = joints_from_json(j.at("joints"), skel);
  if (j.contains("lr_multipliers")) {
    s.lr_multipliers.clear();
    for (const auto& [name, m] : j.at("lr_multipliers").items())
      s.lr_multipliers.emplace_back(skel.joint_index(name), m.get<double>());
  }
}

}  // namespace

RefineConfig refine_config_from_json_text(const std::string& text, const Skeleton& skel, RefineConfig c) {
  json j;
  try {
    j = json::parse(text);
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      read_if(w, "col", c.weights.col);
      read_if(w, "con", c.weights.con);
      read_if(w, "prior", c.weights.prior);
    }
    if (j.contains("stage1")) stage_from_json(j.at("stage1"), skel, c.stage1);
    if (j.contains("stage2")) stage_from_json(j.at("stage2"), skel, c.stage2);
    if (j.contains("prior")) {
      const json& p = j.at("prior");
      read_if(p, "barrier_weight", c.prior.barrier_weight);
      if (p.contains("weights"))
        for (const auto& [name, w] : p.at("weights").items()) {
          const int idx = skel.joint_index(name);
          if (idx <= 0 || idx >= kNumBodyJoints) throw Error(ErrorKind::Input, "prior weight on non-body joint " + name);
          c.prior.weights[idx - 1] = w.get<double>();
        }
    }
    if (j.contains("adam")) {
      const json& a = j.at("adam");
      read_if(a, "beta1", c.adam.beta1);
      read_if(a, "beta2", c.adam.beta2);
      read_if(a, "epsilon", c.adam.epsilon);
    }
    read_if(j, "safeguard_ratio", c.safeguard_ratio);
    read_if(j, "snapshot_interval", c.snapshot_interval);
    read_if(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad optimizer config: ") + e.what());
  }
  c.validate(skel);
  return c;
}

RefineConfig load_refine_config(const std::filesystem::path& path, const Skeleton& skel, RefineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return refine_config_from_json_text(ss.str(), skel, std::move(base));
}

// --- trace -----------------------------------------------------------------------

std::string OptimTrace::to_csv() const {
  std::string out = "stage,iteration,L_col,L_con,L_prior,total,safeguard\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%d\n", r.stage, r.iteration, r.terms.col,
                  r.terms.con, r.terms.prior, r.terms.total, r.safeguard ? 1 : 0);
    out += buf;
  }
  return out;
}

void OptimTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_csv();
}

std::vector<TraceRow> OptimTrace::stage_rows(int stage) const {
  std::vector<TraceRow> out;
  for (const auto& r : rows)
    if (r.stage == stage) out.push_back(r);
  return out;
}

// --- optimizer -------------------------------------------------------------------

namespace {

struct AdamState {
  std::vector<double> x, m, v;
  int t = 0;
};

class StageRunner {
 public:
  StageRunner(const Objective& obj, const Skeleton& skel, const StageConfig& stage, const RefineConfig& cfg,
              int stage_id, BodyPose& pose, OptimTrace& trace)
      : obj_(obj), skel_(skel), stage_(stage), cfg_(cfg), id_(stage_id), pose_(pose), trace_(trace),
        mask_(stage.mask(skel)) {
    lr_.assign(mask_.size(), stage.learning_rate);
    for (const auto& [j, mult] : stage.lr_multipliers)
      for (int i = 0; i < 3; ++i) lr_[joint_param_offset(j) + i] *= mult;
  }

  void run() {
    AdamState s{pack_parameters(pose_), std::vector<double>(mask_.size(), 0.0),
                std::vector<double>(mask_.size(), 0.0), 0};
    std::vector<double> grad;
    LossTerms terms = eval(s.x, grad);
    record(0, terms, false, s.x);
    bool halved = false;
    for (int k = 1; k <= stage_.iterations; ++k) {
      const AdamState prev = s;
      const std::vector<double> prev_grad = grad;
      step(s, prev_grad);
      LossTerms next = eval(s.x, grad);
      bool fired = false;
      if (!halved && next.total > cfg_.safeguard_ratio * terms.total) {
        spdlog::debug("stage {} iteration {}: loss {} -> {}, halving step size", id_, k, terms.total, next.total);
        for (double& l : lr_) l *= 0.5;
        halved = fired = true;
        s = prev;
        step(s, prev_grad);
        next = eval(s.x, grad);
      }
      terms = next;
      commit(s.x);
      record(k, terms, fired, s.x);
    }
  }

 private:
  LossTerms eval(const std::vector<double>& x, std::vector<double>& grad) {
    BodyPose p = pose_;
    unpack_parameters(x, p);
    return obj_.evaluate(p, mask_, grad);
  }

  void step(AdamState& s, const std::vector<double>& g) const {
    const AdamParams& a = cfg_.adam;
    ++s.t;
    const double c1 = 1.0 - std::pow(a.beta1, s.t);
    const double c2 = 1.0 - std::pow(a.beta2, s.t);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!mask_[i]) continue;
      s.m[i] = a.beta1 * s.m[i] + (1.0 - a.beta1) * g[i];
      s.v[i] = a.beta2 * s.v[i] + (1.0 - a.beta2) * g[i] * g[i];
      s.x[i] -= lr_[i] * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + a.epsilon);
    }
    if (mask_[kParamYaw]) s.x[kParamYaw] = wrap_angle(s.x[kParamYaw]);
    for (int j = 1; j < static_cast<int>(skel_.joints.size()); ++j) {
      if (!mask_.joint_free(j)) continue;
      const int o = joint_param_offset(j);
      const Vec3 w = canonical_rotation(Vec3(s.x[o], s.x[o + 1], s.x[o + 2]));
      s.x[o] = w.x();
      s.x[o + 1] = w.y();
      s.x[o + 2] = w.z();
    }
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (mask_[i] && !std::isfinite(s.x[i])) throw Error(ErrorKind::Numeric, "parameter update is not finite");
  }

  void commit(const std::vector<double>& x) { unpack_parameters(x, pose_); }

  void record(int k, const LossTerms& terms, bool fired, const std::vector<double>& x) {
    trace_.rows.push_back({id_, k, terms, fired});
    if (cfg_.snapshot_interval > 0 && k % cfg_.snapshot_interval == 0) trace_.snapshots.push_back({id_, k, x});
  }

  const Objective& obj_;
  const Skeleton& skel_;
  const StageConfig& stage_;
  const RefineConfig& cfg_;
  int id_;
  BodyPose& pose_;
  OptimTrace& trace_;
  ParamMask mask_;
  std::vector<double> lr_;
};

}  // namespace

RefineResult refine(const BodyPose& init, const Skeleton& skel, const PointCloud& cloud, const ContactGraph& graph,
                    std::span<const SceneElement> elements, const RefineConfig& cfg) {
  cfg.validate(skel);
  init.validate(skel);
  RefineResult result{init, {}, std::nullopt};
  Objective obj(skel, init.beta, cloud, graph, elements, cfg.weights, cfg.prior);
  const StageConfig* stages[2] = {&cfg.stage1, &cfg.stage2};
  try {
    for (int s = 0; s < 2; ++s) {
      const StageConfig& stage = *stages[s];
      if (stage.iterations == 0) continue;
      LossWeights w = cfg.weights;
      if (!stage.use_prior) w.prior = 0.0;
      obj.set_weights(w);
      StageRunner(obj, skel, stage, cfg, s + 1, result.pose, result.trace).run();
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Numeric) throw;
    spdlog::error("refine aborted: {}", e.what());
    result.error = e.what();
  }
  return result;
}

}  // namespace hsi
