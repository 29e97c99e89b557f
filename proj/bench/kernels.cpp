// Serial reference kernels against their OpenMP versions.
#include <benchmark/benchmark.h>

#include "cemwave/assembly.hpp"
#include "cemwave/media.hpp"
#include "cemwave/spaces.hpp"

using namespace cemwave;

namespace {

CoefficientField medium(Index n) {
  GeometrySpec g;
  g.contrast = 1e4;
  Feature a;
  a.kind = Feature::Kind::horizontal_strip;
  a.y0 = 0.40;
  a.y1 = 0.47;
  Feature b;
  b.kind = Feature::Kind::vertical_strip;
  b.x0 = 0.65;
  b.x1 = 0.72;
  g.features = {a, b};
  return synth_channels(g, n);
}

Exec exec_of(const benchmark::State& state) {
  return state.range(1) ? Exec::parallel : Exec::serial;
}

void BM_AssembleStiffness(benchmark::State& state) {
  const Index n = state.range(0);
  const TwoLevelMesh mesh(n, 10);
  const CoefficientField kappa = medium(n);
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_stiffness(mesh, kappa, mesh.global_region(), exec_of(state)));
}

void BM_AuxSpace(benchmark::State& state) {
  const Index n = state.range(0);
  const TwoLevelMesh mesh(n, 10);
  const CoefficientField kappa = medium(n);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_aux_space(mesh, kappa, 3, KappaTilde::h_scaled, exec_of(state)));
}

void BM_CemBasis(benchmark::State& state) {
  const Index n = state.range(0);
  const TwoLevelMesh mesh(n, 10);
  const CoefficientField kappa = medium(n);
  const AuxSpace aux = build_aux_space(mesh, kappa, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_cem_basis(mesh, kappa, aux, 2, exec_of(state)));
}

void BM_SpacePair(benchmark::State& state) {
  const Index n = state.range(0);
  const TwoLevelMesh mesh(n, 10);
  const CoefficientField kappa = medium(n);
  SpaceParams p;
  for (auto _ : state) benchmark::DoNotOptimize(build_space_pair(mesh, kappa, p, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_AssembleStiffness)->ArgsProduct({{100, 200}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AuxSpace)->ArgsProduct({{100}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CemBasis)->ArgsProduct({{100}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpacePair)->ArgsProduct({{50, 100}, {0, 1}})->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
