// hsi: command-line driver for scene reconstruction, contact reasoning,
// body initialization, refinement and evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hsi/pipeline.hpp"
#include "hsi/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string skeleton;
  std::string log_level = "info";
};

hsi::Skeleton load_skel(const Common& c) {
  return c.skeleton.empty() ? hsi::default_skeleton() : hsi::load_skeleton(c.skeleton);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw hsi::Error(hsi::ErrorKind::Input, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string task_or_file(const std::string& task, const fs::path& bundle) {
  if (!task.empty()) return task;
  const fs::path f = bundle / "task.txt";
  if (!fs::is_regular_file(f)) throw hsi::Error(hsi::ErrorKind::Input, "--task is required");
  std::string t = slurp(f);
  while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) t.pop_back();
  return t;
}

hsi::ReasonerConfig reasoner_or_fixture(const std::string& spec, const fs::path& bundle) {
  if (!spec.empty()) return hsi::ReasonerConfig::parse(spec);
  const fs::path f = bundle / "fixtures.json";
  if (!fs::is_regular_file(f)) throw hsi::Error(hsi::ErrorKind::Input, "--reasoner is required");
  return hsi::ReasonerConfig::parse("fixture:" + f.string());
}

hsi::RefineConfig refine_config(const std::string& path, const hsi::Skeleton& skel) {
  hsi::RefineConfig c = hsi::RefineConfig::defaults(skel);
  if (!path.empty()) c = hsi::load_refine_config(path, skel, c);
  return c;
}

// Pipeline-level keys in the config file take precedence over flags.
void overlay_pipeline_keys(const std::string& path, hsi::PipelineConfig& cfg) {
  if (path.empty()) return;
  json j;
  try {
    j = json::parse(slurp(path));
    if (j.contains("bundle")) cfg.bundle = j.at("bundle").get<std::string>();
    if (j.contains("task")) cfg.task_prompt = j.at("task").get<std::string>();
    if (j.contains("reasoner")) cfg.reasoner = hsi::ReasonerConfig::parse(j.at("reasoner").get<std::string>());
    if (j.contains("instructions")) cfg.instructions = j.at("instructions").get<std::string>();
    if (j.contains("init_pose")) cfg.init_pose = j.at("init_pose").get<std::string>();
    if (j.contains("view")) cfg.view = j.at("view").get<int>();
    if (j.contains("standoff")) cfg.standoff = j.at("standoff").get<double>();
    if (j.contains("laterality_delta")) cfg.laterality_delta = j.at("laterality_delta").get<double>();
    if (j.contains("output")) cfg.output_dir = j.at("output").get<std::string>();
    if (j.contains("reconstruction")) {
      const json& r = j.at("reconstruction");
      if (r.contains("stride")) cfg.reconstruction.stride = r.at("stride").get<int>();
      if (r.contains("scene_voxel")) cfg.reconstruction.scene_voxel = r.at("scene_voxel").get<double>();
      if (r.contains("element_voxel")) cfg.reconstruction.element_voxel = r.at("element_voxel").get<double>();
    }
  } catch (const json::exception& e) {
    throw hsi::Error(hsi::ErrorKind::Input, std::string("bad config: ") + e.what());
  }
}

void add_recon_opts(CLI::App* cmd, hsi::ReconstructOptions& o) {
  cmd->add_option("--stride", o.stride, "Pixel stride for back-projection")->check(CLI::PositiveNumber);
  cmd->add_option("--scene-voxel", o.scene_voxel, "Voxel size of the fused scene cloud (m)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--element-voxel", o.element_voxel, "Voxel size of element clouds (m)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-scene interaction synthesis on RGB-D scene bundles"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--skeleton", common.skeleton, "Skeleton JSON (built-in default when omitted)");
  app.add_option("--log-level", common.log_level, "trace|debug|info|warn|error|off");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Fuse a scene bundle into clouds and elements");
  std::string rec_bundle, rec_out;
  hsi::ReconstructOptions rec_opts;
  rec->add_option("--bundle", rec_bundle, "Scene bundle directory")->required();
  rec->add_option("--out", rec_out, "Reconstruction directory")->required();
  add_recon_opts(rec, rec_opts);

  // reason
  auto* rea = app.add_subcommand("reason", "Query the reasoner for a contact graph");
  std::string rea_recon, rea_task, rea_reasoner, rea_out, rea_instr;
  rea->add_option("--recon", rea_recon, "Reconstruction directory")->required();
  rea->add_option("--task", rea_task, "Task prompt")->required();
  rea->add_option("--reasoner", rea_reasoner, "fixture:<path> or remote:<url>")->required();
  rea->add_option("--instructions", rea_instr, "Instruction template file");
  rea->add_option("--out", rea_out, "Output graph.json")->required();

  // init
  auto* ini = app.add_subcommand("init", "Initialize the body and refine hand laterality");
  std::string ini_recon, ini_graph, ini_pose, ini_out;
  std::optional<int> ini_view;
  std::optional<double> ini_delta;
  double ini_standoff = 0.6;
  ini->add_option("--recon", ini_recon, "Reconstruction directory")->required();
  ini->add_option("--graph", ini_graph, "Contact graph JSON")->required();
  ini->add_option("--init-pose", ini_pose, "Initial pose JSON (t-pose placement when omitted)");
  ini->add_option("--view", ini_view, "View used for initialization and laterality");
  ini->add_option("--standoff", ini_standoff, "T-pose distance from the functional element (m)");
  ini->add_option("--delta", ini_delta, "Laterality tolerance in pixels");
  ini->add_option("--out", ini_out, "Output directory")->required();

  // optimize
  auto* opt = app.add_subcommand("optimize", "Two-stage refinement of the body pose");
  std::string opt_recon, opt_graph, opt_pose, opt_config, opt_out;
  opt->add_option("--recon", opt_recon, "Reconstruction directory")->required();
  opt->add_option("--graph", opt_graph, "Refined contact graph JSON")->required();
  opt->add_option("--pose", opt_pose, "Initial pose JSON")->required();
  opt->add_option("--config", opt_config, "Optimizer config JSON");
  opt->add_option("--out", opt_out, "Output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a pose against the scene");
  std::string ev_recon, ev_graph, ev_pose, ev_out;
  bool ev_root = false;
  ev->add_option("--recon", ev_recon, "Reconstruction directory")->required();
  ev->add_option("--graph", ev_graph, "Contact graph JSON")->required();
  ev->add_option("--pose", ev_pose, "Pose JSON")->required();
  ev->add_flag("--root", ev_root, "Report square-rooted distances (m)");
  ev->add_option("--out", ev_out, "Output report.json");

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "Run every stage end to end");
  hsi::PipelineConfig pcfg;
  std::string pip_bundle, pip_task, pip_reasoner, pip_pose, pip_config, pip_out, pip_instr;
  pip->add_option("--bundle", pip_bundle, "Scene bundle directory");
  pip->add_option("--task", pip_task, "Task prompt (bundle task.txt when omitted)");
  pip->add_option("--reasoner", pip_reasoner, "fixture:<path> or remote:<url> (bundle fixtures.json when omitted)");
  pip->add_option("--instructions", pip_instr, "Instruction template file");
  pip->add_option("--init-pose", pip_pose, "Initial pose JSON (bundle/init_pose.json if present, else t-pose placement)");
  pip->add_option("--view", pcfg.view, "View used for initialization and laterality");
  pip->add_option("--standoff", pcfg.standoff, "T-pose distance from the functional element (m)");
  pip->add_option("--delta", pcfg.laterality_delta, "Laterality tolerance in pixels");
  pip->add_option("--config", pip_config, "Config JSON; its keys override flags");
  pip->add_option("--seed", pcfg.seed, "Seed (no stochastic step uses it today)");
  pip->add_option("--out", pip_out, "Output directory");
  add_recon_opts(pip, pcfg.reconstruction);

  // synth-scene
  auto* syn = app.add_subcommand("synth-scene", "Render the synthetic reach scene bundle");
  std::string syn_out;
  bool syn_mirrored = false;
  syn->add_option("--out", syn_out, "Bundle directory")->required();
  syn->add_flag("--mirrored", syn_mirrored, "Mirror the scene and ship a left-handed fixture graph");

  // skeleton
  auto* sk = app.add_subcommand("skeleton", "Write the built-in skeleton as JSON");
  std::string sk_out;
  sk->add_option("--out", sk_out, "Output JSON")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(common.log_level));

  try {
    const hsi::Skeleton skel = load_skel(common);
    if (*rec) {
      const hsi::Reconstruction r = hsi::stage_reconstruct(rec_bundle, rec_opts);
      hsi::save_reconstruction(rec_out, r);
      std::printf("%zu scene points, %zu elements\n", r.cloud.size(), r.elements.size());
    } else if (*rea) {
      const hsi::Reconstruction r = hsi::load_reconstruction(rea_recon);
      hsi::ReasonerClient client(hsi::ReasonerConfig::parse(rea_reasoner));
      std::optional<std::string> text;
      if (!rea_instr.empty()) text = hsi::read_instructions(rea_instr);
      hsi::save_contact_graph(rea_out, hsi::stage_reason(r, rea_task, client, text));
    } else if (*ini) {
      const hsi::Reconstruction r = hsi::load_reconstruction(ini_recon);
      const hsi::ContactGraph g = hsi::load_contact_graph(ini_graph);
      std::optional<fs::path> pose;
      if (!ini_pose.empty()) pose = ini_pose;
      const hsi::InitResult res = hsi::stage_init(r, g, skel, pose, ini_view, ini_standoff, ini_delta);
      fs::create_directories(ini_out);
      hsi::save_pose(fs::path(ini_out) / "pose_init.json", res.pose);
      hsi::save_contact_graph(fs::path(ini_out) / "graph_refined.json", res.laterality.graph);
      std::printf("view %d, d_left %.2f px, d_right %.2f px, %s\n", res.view, res.laterality.d_left,
                  res.laterality.d_right, res.laterality.swapped ? "swapped" : "unchanged");
    } else if (*opt) {
      const hsi::Reconstruction r = hsi::load_reconstruction(opt_recon);
      const hsi::ContactGraph g = hsi::load_contact_graph(opt_graph);
      const hsi::BodyPose init = hsi::load_init_pose(opt_pose, skel);
      const hsi::RefineResult res = hsi::refine(init, skel, r.cloud, g, r.elements, refine_config(opt_config, skel));
      fs::create_directories(opt_out);
      res.trace.write_csv(fs::path(opt_out) / "trace.csv");
      hsi::save_pose(fs::path(opt_out) / "pose.json", res.pose);
      hsi::write_body_obj(fs::path(opt_out) / "body.obj", hsi::forward_kinematics(skel, res.pose));
      if (res.error) throw hsi::Error(hsi::ErrorKind::Numeric, *res.error);
    } else if (*ev) {
      const hsi::Reconstruction r = hsi::load_reconstruction(ev_recon);
      const hsi::ContactGraph g = hsi::load_contact_graph(ev_graph);
      const hsi::BodyPose pose = hsi::load_pose(ev_pose, skel);
      hsi::MetricsReport rep = hsi::evaluate(pose, skel, r.cloud, r.elements, g);
      if (ev_root) rep = rep.root();
      std::fputs(rep.to_table().c_str(), stdout);
      if (!ev_out.empty()) hsi::save_report(ev_out, rep);
    } else if (*pip) {
      pcfg.bundle = pip_bundle;
      pcfg.output_dir = pip_out;
      if (!pip_pose.empty()) pcfg.init_pose = pip_pose;
      if (!pip_instr.empty()) pcfg.instructions = pip_instr;
      overlay_pipeline_keys(pip_config, pcfg);
      if (pcfg.bundle.empty()) throw hsi::Error(hsi::ErrorKind::Input, "--bundle is required");
      if (pcfg.output_dir.empty()) throw hsi::Error(hsi::ErrorKind::Input, "--out is required");
      if (!pcfg.init_pose && fs::exists(pcfg.bundle / "init_pose.json")) pcfg.init_pose = pcfg.bundle / "init_pose.json";
      pcfg.task_prompt = task_or_file(pcfg.task_prompt.empty() ? pip_task : pcfg.task_prompt, pcfg.bundle);
      if (pcfg.reasoner.fixture_path.empty() && pcfg.reasoner.endpoint.empty())
        pcfg.reasoner = reasoner_or_fixture(pip_reasoner, pcfg.bundle);
      pcfg.refine = refine_config(pip_config, skel);
      const hsi::PipelineResult res = hsi::run_pipeline(pcfg, skel);
      std::fputs(res.report.to_table().c_str(), stdout);
    } else if (*syn) {
      hsi::write_reach_scene(syn_out, syn_mirrored, skel);
    } else if (*sk) {
      hsi::save_skeleton(sk_out, skel);
    }
  } catch (const hsi::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(hsi::to_string(e.kind())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
