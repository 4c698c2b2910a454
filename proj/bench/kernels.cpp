// Serial vs OpenMP timings of the hot kernels. Thread count follows
// WARPFORGE_THREADS / OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include "warpforge/objective.hpp"
#include "warpforge/reference.hpp"
#include "warpforge/stitcher.hpp"
#include "warpforge/synthetic.hpp"
#include "warpforge/tps_ffd.hpp"

namespace {

using namespace warpforge;

constexpr int kHeight = 566;
constexpr int kWidth = 800;

const TpsSolution& solution() {
    static const TpsSolution sol = tps_fit(make_synthetic_warp(7, kWidth, kHeight, 0.03, 0.02).control_grid(12, 12));
    return sol;
}

Exec policy(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_VanillaTps(benchmark::State& state) {
    const Meshgrid mesh = Meshgrid::pixels(kWidth, kHeight);
    for (auto _ : state) benchmark::DoNotOptimize(tps_eval_flow(solution(), mesh, {}, policy(state)));
}
BENCHMARK(BM_VanillaTps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FfdTps(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(ffd_tps_eval(solution(), kWidth, kHeight, {}, policy(state)));
}
BENCHMARK(BM_FfdTps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FfdUpsampleReference(benchmark::State& state) {
    const FlowField sparse = tps_eval_flow(solution(), compress_mesh(kWidth, kHeight, 12, 12));
    for (auto _ : state) benchmark::DoNotOptimize(reference::ffd_upsample(sparse, kWidth, kHeight));
}
BENCHMARK(BM_FfdUpsampleReference)->Unit(benchmark::kMillisecond);

void BM_Remap(benchmark::State& state) {
    const Image img = procedural_texture(kHeight, kWidth, 3);
    const FlowField flow = ffd_tps_eval(solution(), kWidth, kHeight);
    for (auto _ : state) benchmark::DoNotOptimize(remap(img, flow, 0.0, 0.0, policy(state)));
}
BENCHMARK(BM_Remap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MaskedL1WithGrad(benchmark::State& state) {
    const Image a = procedural_texture(kHeight, kWidth, 3);
    const Image b = procedural_texture(kHeight, kWidth, 4);
    const FlowField flow = ffd_tps_eval(solution(), kWidth, kHeight);
    FlowField ga, gb;
    for (auto _ : state) benchmark::DoNotOptimize(masked_l1(a, b, flow, flow, {}, policy(state), &ga, &gb));
}
BENCHMARK(BM_MaskedL1WithGrad)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
