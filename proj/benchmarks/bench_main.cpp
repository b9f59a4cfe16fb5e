#include <benchmark/benchmark.h>

#include "fdptomo/fdp.hpp"
#include "fdptomo/herald.hpp"
#include "fdptomo/homodyne.hpp"
#include "fdptomo/ml.hpp"
#include "fdptomo/probe.hpp"

using namespace fdptomo;

namespace {

DetectorModel detector() {
  DetectorModel d;
  d.eta_bhd = 0.85;
  d.static_blocked_samples = 100000;
  return d;
}

struct Fixture {
  ProbeSet probes;
  DataPattern target;

  static const Fixture& get() {
    static const Fixture f = [] {
      Fixture x;
      const auto ladder = build_probe_ladder(0.17, 2.24, 48, 20);
      x.probes = calibrate_probes(ladder, detector(), 1000000, BinningSpec{}, 1);
      const auto rho = heralded_state(TmsvSpec{0.2, 20}, SmdSpec{}, 2);
      x.target = acquire_pattern(rho, detector(), 1000000, BinningSpec{}, 2);
      return x;
    }();
    return f;
  }
};

}  // namespace

static void BM_SimulatePulses(benchmark::State& state) {
  const auto rho = phav_density(1.5, 20);
  const auto k = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_pulses(rho, detector(), k, 3));
  state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_SimulatePulses)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

static void BM_AcquirePattern(benchmark::State& state) {
  const auto rho = fock_state(1, 20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(acquire_pattern(rho, detector(), 1000000, BinningSpec{}, 4));
  }
}
BENCHMARK(BM_AcquirePattern)->Unit(benchmark::kMillisecond);

static void BM_FdpProjectedGradient(benchmark::State& state) {
  const auto& f = Fixture::get();
  const auto p = FdpProblem::from_patterns(f.probes.patterns(), f.target, f.probes.states());
  for (auto _ : state) benchmark::DoNotOptimize(solve_projected_gradient(p));
}
BENCHMARK(BM_FdpProjectedGradient)->Unit(benchmark::kMillisecond);

static void BM_FdpPenalty(benchmark::State& state) {
  const auto& f = Fixture::get();
  const auto p = FdpProblem::from_patterns(f.probes.patterns(), f.target, f.probes.states());
  for (auto _ : state) benchmark::DoNotOptimize(solve_penalty(p));
}
BENCHMARK(BM_FdpPenalty)->Unit(benchmark::kMillisecond);

static void BM_MlReconstruct(benchmark::State& state) {
  const auto& f = Fixture::get();
  const auto povm = build_binned_povm(BinningSpec{}, 20, 0.85);
  for (auto _ : state) benchmark::DoNotOptimize(ml_reconstruct(f.target, povm));
}
BENCHMARK(BM_MlReconstruct)->Unit(benchmark::kMillisecond);

static void BM_BuildPovm(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_binned_povm(BinningSpec{}, 20, 0.85));
}
BENCHMARK(BM_BuildPovm)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
