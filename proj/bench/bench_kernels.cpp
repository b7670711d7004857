// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "etest/bootstrap.hpp"
#include "etest/harness.hpp"
#include "etest/power.hpp"
#include "power_fixtures.hpp"

using namespace etest;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void exec_label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

const harness::Scenario& default_scenario() {
  static const auto sc = harness::synth_scenario(harness::load_scenario(
      std::filesystem::path(ETEST_SOURCE_DIR) / "scenarios" / "default_gaussian.json"));
  return sc;
}

void BM_McPower(benchmark::State& state) {
  Rng rng(3);
  const auto spec = fixture::random_spec(rng);
  const auto fidelity = static_cast<power::Fidelity>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(power::mc_power(spec, 20000, fidelity, 9, exec_of(state)));
  }
  exec_label(state);
}
BENCHMARK(BM_McPower)->ArgsProduct({{0, 1}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_NullScores(benchmark::State& state) {
  const auto& sc = default_scenario();
  for (auto _ : state) benchmark::DoNotOptimize(harness::null_scores(sc, 2000, 1, exec_of(state)));
  exec_label(state);
}
BENCHMARK(BM_NullScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  const Shape shape{8, 8, 1};
  Rng rng(4);
  Vector x(64);
  for (auto& v : x) v = rng.normal();
  const MeasurementVec y2(x, NoiseFamily::Gaussian);
  const auto est = ops::Estimator::identity(shape);
  const ops::CyclicShift2D group{8, 8};
  const auto cov = CovModel::scaled_identity(64, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        boot::equivariant_bootstrap(y2, ForwardModel::identity(), cov, est, group, 2000, 5, exec_of(state)));
  }
  exec_label(state);
}
BENCHMARK(BM_Bootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
