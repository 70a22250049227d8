#include <benchmark/benchmark.h>

#include <random>

#include "graspinf/dataset.hpp"
#include "graspinf/model.hpp"
#include "graspinf/patches.hpp"
#include "graspinf/planner.hpp"
#include "graspinf/world.hpp"

using namespace graspinf;

namespace {

const GraspSample& probe() {
    static const Dataset ds = collect_dataset(1, 3, world::default_families(), world::WorldConfig{});
    return ds.samples.front();
}

GraspModel make(int arch) {
    return arch == 0 ? GraspModel::config_net(ConfigNetSpec{}, PatchMode::fixed, Interp::bilinear, 1)
                     : GraspModel::patch_net(PatchNetSpec{}, Interp::bilinear, 1);
}

const char* arch_name(int arch) { return arch == 0 ? "config-net" : "patch-net"; }

void BM_Render(benchmark::State& state) {
    const world::WorldConfig wc;
    const auto& shape = probe().shape;
    for (auto _ : state) benchmark::DoNotOptimize(world::render(shape, wc));
}
BENCHMARK(BM_Render);

void BM_ExtractGraspPatches(benchmark::State& state) {
    const auto& s = probe();
    for (auto _ : state) benchmark::DoNotOptimize(extract_grasp_patches(s.obs, s.theta, {}, Interp::bilinear));
}
BENCHMARK(BM_ExtractGraspPatches);

void BM_Forward(benchmark::State& state) {
    const GraspModel m = make(static_cast<int>(state.range(0)));
    const auto& s = probe();
    const auto in = m.inputs(s.obs, s.theta);
    Workspace ws;
    for (auto _ : state) benchmark::DoNotOptimize(m.graph().forward_scalar(ws, in, Mode::eval));
    state.SetLabel(arch_name(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1);

void BM_ForwardBackwardWeights(benchmark::State& state) {
    const GraspModel m = make(static_cast<int>(state.range(0)));
    const auto& s = probe();
    const auto in = m.inputs(s.obs, s.theta);
    Workspace ws;
    ParamGradients grads = m.graph().zero_gradients();
    for (auto _ : state) {
        m.graph().forward(ws, in, Mode::train, 7);
        m.graph().backward_weights(ws, 1.0, grads);
        benchmark::ClobberMemory();
    }
    state.SetLabel(arch_name(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ForwardBackwardWeights)->Arg(0)->Arg(1);

void BM_ConfigGradient(benchmark::State& state) {
    const GraspModel m = make(static_cast<int>(state.range(0)));
    const auto& s = probe();
    ModelObjective f(m, s.obs, GradientMode::full_chain);
    std::vector<double> grad;
    GraspConfig g = s.theta;
    for (auto _ : state) {
        g[0] += 1e-9;  // defeat the objective's single-point cache
        benchmark::DoNotOptimize(f.gradient(g, grad));
    }
    state.SetLabel(arch_name(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ConfigGradient)->Arg(0)->Arg(1);

void BM_AscendOneInit(benchmark::State& state) {
    const GraspModel m = make(1);
    const auto& s = probe();
    const PlannerConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(ascend(m, s.obs, s.theta, cfg));
}
BENCHMARK(BM_AscendOneInit)->Unit(benchmark::kMillisecond);

void BM_CollectTrial(benchmark::State& state) {
    const auto fams = world::default_families();
    const world::WorldConfig wc;
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(collect_dataset(1, ++seed, fams, wc));
}
BENCHMARK(BM_CollectTrial);

}  // namespace

BENCHMARK_MAIN();
