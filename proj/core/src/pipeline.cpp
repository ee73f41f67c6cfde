#include "hsi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hsi/error.hpp"

namespace hsi {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  if (!fs::is_directory(bundle)) throw Error(ErrorKind::Input, "scene bundle not found: " + bundle.string());
  if (task_prompt.empty()) throw Error(ErrorKind::Input, "task prompt is empty");
  if (init_pose && !fs::is_regular_file(*init_pose))
    throw Error(ErrorKind::Input, "init pose not found: " + init_pose->string());
  if (!std::isfinite(standoff) || standoff <= 0.0) throw Error(ErrorKind::Input, "standoff must be > 0");
  if (output_dir.empty()) throw Error(ErrorKind::Input, "output directory is required");
  reasoner.validate();
}

const SceneElement& primary_functional_element(const Reconstruction& recon, const ContactGraph& graph) {
  const SceneElement* fallback = nullptr;
  for (const auto& e : graph.edges) {
    const SceneElement* el = recon.find(e.element);
    if (!el || el->role != ElementRole::Functional) continue;
    if (is_hand_related_part(e.part)) return *el;
    if (!fallback) fallback = el;
  }
  if (!fallback) throw Error(ErrorKind::Input, "contact graph has no functional element");
  return *fallback;
}

int choose_view(const SceneElement& element) {
  if (element.boxes.empty()) throw Error(ErrorKind::Input, "element '" + element.id + "' has no image box");
  const BBox2d* best = &element.boxes.front();
  for (const auto& b : element.boxes)
    if (b.area() > best->area() || (b.area() == best->area() && b.view < best->view)) best = &b;
  return best->view;
}

const SceneElement& find_floor(const Reconstruction& recon) {
  for (const auto& e : recon.elements) {
    if (e.role != ElementRole::Supporting) continue;
    if (e.id.find("floor") != std::string::npos || e.label.find("floor") != std::string::npos) return e;
  }
  throw Error(ErrorKind::Placement, "no supporting floor element");
}

BodyPose init_tpose(const Reconstruction& recon, const SceneElement& element, const Skeleton& skel, int view,
                    double standoff) {
  if (element.points.empty()) throw Error(ErrorKind::EmptyElement, "element '" + element.id + "' has no points");
  if (view < 0 || view >= static_cast<int>(recon.cameras.size()))
    throw Error(ErrorKind::Input, "view " + std::to_string(view) + " does not exist");
  const SceneElement& floor = find_floor(recon);
  if (floor.points.empty()) throw Error(ErrorKind::EmptyElement, "floor element has no points");

  std::vector<double> zs;
  for (const Vec3& p : floor.points.points) zs.push_back(p.z());
  std::nth_element(zs.begin(), zs.begin() + zs.size() / 2, zs.end());
  const double floor_z = zs[zs.size() / 2];

  const Vec3 c = centroid(element.points);
  Vec3 d = recon.cameras[view].center() - c;
  d.z() = 0.0;
  if (d.norm() < 1e-9) throw Error(ErrorKind::Placement, "camera is directly above the element");
  d.normalize();

  BodyPose pose = BodyPose::rest(skel);
  pose.phi = Vec3(0.0, 0.0, std::atan2(d.x(), -d.y()));
  const PosedBody posed = forward_kinematics(skel, pose);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& cap : posed.capsules_world) lowest = std::min(lowest, std::min(cap.a.z(), cap.b.z()) - cap.radius);
  const Vec3 pelvis = posed.joint_position(0);
  const Vec3 target = c + standoff * d;
  pose.r = Vec3(target.x() - pelvis.x(), target.y() - pelvis.y(), floor_z - lowest);
  return pose;
}

BodyPose load_init_pose(const fs::path& path, const Skeleton& skel) { return load_pose(path, skel); }

// --- stages ------------------------------------------------------------------------

Reconstruction stage_reconstruct(const fs::path& bundle, const ReconstructOptions& opts) {
  return reconstruct(load_bundle(bundle), opts);
}

std::string read_instructions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open instructions " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ContactGraph stage_reason(const Reconstruction& recon, const std::string& task_prompt, ReasonerClient& client,
                          const std::optional<std::string>& instructions) {
  const auto proposals = client.request_elements(task_prompt);
  for (const auto& p : proposals) {
    const bool found = std::any_of(recon.elements.begin(), recon.elements.end(),
                                   [&](const SceneElement& e) { return e.label == p.label && e.role == p.role; });
    if (!found) spdlog::warn("proposed element '{}' ({}) has no mask in the scene", p.label, to_string(p.role));
  }
  std::vector<CandidateElement> candidates;
  for (const auto& e : recon.elements) candidates.push_back({e.id, e.label, e.role});
  ReasonerRequest req = ReasonerRequest::make(task_prompt, std::move(candidates));
  if (instructions) req.instructions = *instructions;
  return client.request_contact_graph(req);
}

InitResult stage_init(const Reconstruction& recon, const ContactGraph& graph, const Skeleton& skel,
                      const std::optional<fs::path>& init_pose, std::optional<int> view, double standoff,
                      std::optional<double> laterality_delta) {
  const SceneElement& element = primary_functional_element(recon, graph);
  InitResult out;
  out.view = view ? *view : choose_view(element);
  if (out.view < 0 || out.view >= static_cast<int>(recon.cameras.size()))
    throw Error(ErrorKind::Input, "view " + std::to_string(out.view) + " does not exist");
  out.pose = init_pose ? load_init_pose(*init_pose, skel) : init_tpose(recon, element, skel, out.view, standoff);

  const Camera& cam = recon.cameras[out.view];
  const double delta = laterality_delta ? *laterality_delta : default_laterality_delta(cam);
  try {
    out.laterality = refine_laterality(graph, skel, forward_kinematics(skel, out.pose), cam, element, out.view, delta);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BehindCamera) throw;
    spdlog::warn("laterality refinement skipped: {}", e.what());
    out.laterality = LateralityResult{graph, 0.0, 0.0, false, e.what()};
  }
  if (out.laterality.swapped)
    spdlog::info("swapped hand laterality (d_left {:.1f} px, d_right {:.1f} px)", out.laterality.d_left,
                 out.laterality.d_right);
  return out;
}

// --- pipeline ----------------------------------------------------------------------

namespace {

template <class F>
auto tagged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, ErrorKind::Io, e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const Skeleton& skel) {
  tagged("config", [&] {
    cfg.validate();
    cfg.refine.validate(skel);
  });
  PipelineResult res;
  const fs::path& out = cfg.output_dir;
  tagged("output", [&] { fs::create_directories(out); });
  auto artifact = [&](const std::string& name) { return res.artifacts[name] = out / name; };

  const Reconstruction recon = tagged("reconstruct", [&] {
    Reconstruction r = stage_reconstruct(cfg.bundle, cfg.reconstruction);
    write_ply(artifact("scene.ply"), r.cloud);
    return r;
  });

  const ContactGraph graph = tagged("reason", [&] {
    ReasonerClient client(cfg.reasoner);
    std::optional<std::string> text;
    if (cfg.instructions) text = read_instructions(*cfg.instructions);
    ContactGraph g = stage_reason(recon, cfg.task_prompt, client, text);
    save_contact_graph(artifact("graph.json"), g);
    return g;
  });

  res.init = tagged("init", [&] {
    InitResult r = stage_init(recon, graph, skel, cfg.init_pose, cfg.view, cfg.standoff, cfg.laterality_delta);
    save_pose(artifact("pose_init.json"), r.pose);
    save_contact_graph(artifact("graph_refined.json"), r.laterality.graph);
    return r;
  });
  const ContactGraph& refined_graph = res.init.laterality.graph;

  res.refined = tagged("optimize", [&] {
    RefineResult r = refine(res.init.pose, skel, recon.cloud, refined_graph, recon.elements, cfg.refine);
    r.trace.write_csv(artifact("trace.csv"));
    save_pose(artifact("pose.json"), r.pose);
    write_body_obj(artifact("body.obj"), forward_kinematics(skel, r.pose));
    if (r.error) throw Error(ErrorKind::Numeric, *r.error);
    return r;
  });

  res.report = tagged("evaluate", [&] {
    MetricsReport m = evaluate(res.refined.pose, skel, recon.cloud, recon.elements, refined_graph);
    save_report(artifact("report.json"), m);
    return m;
  });
  return res;
}

}  // namespace hsi
