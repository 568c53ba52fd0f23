#include <benchmark/benchmark.h>

#include "adcps/config.hpp"
#include "adcps/cusum.hpp"
#include "adcps/detector.hpp"
#include "adcps/estimator.hpp"
#include "adcps/plants.hpp"
#include "adcps/scenario.hpp"

namespace {

using namespace adcps;

SystemModel stabilized_plant() {
  SystemModel sys = inverted_pendulum_cart();
  sys.K = lqr_gain(sys.A, sys.B, Matrix::Identity(4, 4), Matrix::Identity(1, 1));
  return sys;
}

void BM_Simulate(benchmark::State& state) {
  const SystemModel sys = stabilized_plant();
  const NoiseModel noise = NoiseModel::gaussian(0.001 * Matrix::Identity(4, 4));
  const int T = static_cast<int>(state.range(0));
  std::uint64_t run = 0;
  for (auto _ : state) {
    RngStream rng(7, run++);
    benchmark::DoNotOptimize(simulate(sys, noise, Vector::Zero(4), T, rng));
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Simulate)->Arg(1000);

void BM_NoiseSample(benchmark::State& state) {
  const NoiseModel noise = NoiseModel::gaussian(0.001 * Matrix::Identity(4, 4));
  RngStream rng(7, 0);
  for (auto _ : state) benchmark::DoNotOptimize(noise.sample(rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NoiseSample);

void BM_StateDetectorFeed(benchmark::State& state) {
  const SystemModel sys = stabilized_plant();
  const ClosedLoop loop = make_closed_loop(sys);
  DetectorConfig cfg;
  cfg.dim = 4;
  cfg.sigma = 0.001;
  cfg.constants = analysis_constants(loop.A_K, 0.001);
  StateDetector det(loop.A_K, cfg);
  RngStream rng(7, 1);
  Vector z(4);
  for (auto _ : state) {
    for (int i = 0; i < 4; ++i) z(i) = rng.next_gaussian();
    benchmark::DoNotOptimize(det.feed(z));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StateDetectorFeed);

void BM_ResidualDetectorFeed(benchmark::State& state) {
  const SystemModel sys = stabilized_plant();
  const ClosedLoop loop = make_closed_loop(sys);
  DetectorConfig cfg;
  cfg.dim = 4;
  cfg.sigma = 0.01;
  cfg.W = static_cast<int>(state.range(0));
  cfg.mode = DetectorMode::residual;
  cfg.constants = analysis_constants(loop.A_K, 0.001);
  ResidualDetector det(cfg);
  RngStream rng(7, 2);
  Vector r(4);
  for (auto _ : state) {
    for (int i = 0; i < 4; ++i) r(i) = rng.next_gaussian();
    benchmark::DoNotOptimize(det.feed(r));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ResidualDetectorFeed)->Arg(5)->Arg(20);

void BM_CusumStep(benchmark::State& state) {
  const Matrix sigma = 0.011 * Matrix::Identity(4, 4);
  CusumConfig cfg{.nu = 4.0, .h = 50.0, .statistic = CusumStatistic::chi_square};
  CusumDetector det(cfg, sigma);
  RngStream rng(7, 3);
  Vector r(4);
  for (auto _ : state) {
    for (int i = 0; i < 4; ++i) r(i) = rng.next_gaussian() * 0.1;
    benchmark::DoNotOptimize(det.step(r));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CusumStep);

void BM_SolveDare(benchmark::State& state) {
  const SystemModel sys = inverted_pendulum_cart();
  const Matrix q = 0.001 * Matrix::Identity(4, 4);
  const Matrix r = 0.01 * Matrix::Identity(4, 4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_dare(sys.A, sys.C, q, r));
}
BENCHMARK(BM_SolveDare);

void BM_RunScenario(benchmark::State& state) {
  LoadedConfig lc = default_ip_config();
  lc.scenario.run.T = 1000;
  lc.scenario.detector.k_mode = KMode::fixed;
  lc.scenario.detector.k_fixed = 2.0;
  lc.scenario.cusum.h = 100.0;
  const PreparedScenario ps = prepare_scenario(lc.scenario);
  std::uint64_t run = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_prepared(ps, 2, run++));
  state.SetItemsProcessed(state.iterations() * lc.scenario.run.T);
}
BENCHMARK(BM_RunScenario);

}  // namespace

BENCHMARK_MAIN();
