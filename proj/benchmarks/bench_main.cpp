#include <benchmark/benchmark.h>

#include "gex/dual.hpp"
#include "gex/flip_model.hpp"
#include "gex/graphical.hpp"
#include "gex/lanes.hpp"

namespace {

const gex::Decomposition& demasi() {
  static const gex::Decomposition dec = gex::demasi_explicit_decomposition(5.0 / 12);
  return dec;
}

// 64 lanes run from time 0 to 1; cost grows like L^3 (L^2 exclusion rate per edge).
void BM_LaneEngineAdvance(benchmark::State& state) {
  const gex::Torus torus(1, static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    gex::LaneEngine engine(torus, demasi(), seed++);
    engine.advance_to(1.0);
    benchmark::DoNotOptimize(engine.disagreeing_lanes());
  }
  state.SetItemsProcessed(state.iterations() * gex::LaneEngine::kLanes);
}
BENCHMARK(BM_LaneEngineAdvance)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_GenerateMarks(benchmark::State& state) {
  const gex::Torus torus(1, static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const gex::MarkStream ms = gex::generate_marks(torus, demasi(), gex::Construction::GC2, 1.0, seed++);
    benchmark::DoNotOptimize(&ms);
  }
}
BENCHMARK(BM_GenerateMarks)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PivotalIbp(benchmark::State& state) {
  const double T = static_cast<double>(state.range(0)) / 2.0;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const gex::IbpTree tree = gex::run_ibp({gex::ParticleLabel{}}, demasi(), T, seed++);
    benchmark::DoNotOptimize(gex::pivotal_ibp(tree, demasi(), T).members.size());
  }
}
BENCHMARK(BM_PivotalIbp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_RunBep(benchmark::State& state) {
  const gex::Torus torus(1, static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const gex::BepHistory h = gex::run_bep(torus, {0, 1}, demasi(), 1.0, seed++);
    benchmark::DoNotOptimize(h.leaves().size());
  }
}
BENCHMARK(BM_RunBep)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_CoupleBepIbp(benchmark::State& state) {
  const gex::Torus torus(1, static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const gex::CouplingOutcome c = gex::couple_bep_ibp(torus, {0, 1}, demasi(), 30.0, seed++);
    benchmark::DoNotOptimize(c.success);
  }
}
BENCHMARK(BM_CoupleBepIbp)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
