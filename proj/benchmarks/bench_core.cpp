#include <random>

#include <benchmark/benchmark.h>

#include "hsi/kdtree.hpp"
#include "hsi/losses.hpp"
#include "hsi/pipeline.hpp"
#include "hsi/synthetic.hpp"

namespace {

using namespace hsi;

struct ReachFixture {
  Skeleton skel = default_skeleton();
  Reconstruction recon = reconstruct(render_bundle(reach_scene(false)));
  ContactGraph graph = reach_graph("right");
  BodyPose pose;

  ReachFixture() {
    const SceneElement& handle = *recon.find("door_handle");
    pose = init_tpose(recon, handle, skel, choose_view(handle));
  }
};

const ReachFixture& reach() {
  static const ReachFixture f;
  return f;
}

void BM_ForwardKinematics(benchmark::State& state) {
  const Skeleton skel = default_skeleton();
  const BodyPose pose = BodyPose::rest(skel);
  const LocalGeometry geom = resolve_geometry(skel, pose.beta);
  for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(skel, geom, pose));
}
BENCHMARK(BM_ForwardKinematics);

void BM_KdTreeBuild(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(KdTree(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdTreeBuild)->Arg(1000)->Arg(100000);

void BM_KdTreeQuery(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const KdTree tree(pts);
  for (auto _ : state) benchmark::DoNotOptimize(tree.nearest({u(rng), u(rng), u(rng)}));
}
BENCHMARK(BM_KdTreeQuery)->Arg(1000)->Arg(100000);

void BM_ObjectiveEvaluate(benchmark::State& state) {
  const auto& f = reach();
  const Objective obj(f.skel, f.pose.beta, f.recon.cloud, f.graph, f.recon.elements, {}, PriorConfig::defaults(f.skel));
  for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(f.pose));
  state.counters["points"] = static_cast<double>(f.recon.cloud.size());
}
BENCHMARK(BM_ObjectiveEvaluate);

void BM_ObjectiveGradient(benchmark::State& state) {
  const auto& f = reach();
  const Objective obj(f.skel, f.pose.beta, f.recon.cloud, f.graph, f.recon.elements, {}, PriorConfig::defaults(f.skel));
  const ParamMask mask = ParamMask::all(f.skel);
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(f.pose, mask, grad));
}
BENCHMARK(BM_ObjectiveGradient);

void BM_RefineDefaults(benchmark::State& state) {
  const auto& f = reach();
  const RefineConfig cfg = RefineConfig::defaults(f.skel);
  for (auto _ : state)
    benchmark::DoNotOptimize(refine(f.pose, f.skel, f.recon.cloud, f.graph, f.recon.elements, cfg));
}
BENCHMARK(BM_RefineDefaults)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
