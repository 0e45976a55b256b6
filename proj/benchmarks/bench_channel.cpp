#include <benchmark/benchmark.h>

#include "marsma/channel.hpp"

namespace {

using namespace marsma;

void BM_FieldResponseVector(benchmark::State& state) {
  const int n_paths = static_cast<int>(state.range(0));
  std::vector<double> angles(n_paths);
  Rng rng(1);
  for (double& a : angles) a = rng.uniform(0.0, kPi);
  for (auto _ : state) {
    benchmark::DoNotOptimize(field_response_vector(0.37, angles, 0.1));
  }
}
BENCHMARK(BM_FieldResponseVector)->Arg(6)->Arg(16);

void BM_ChannelVectors(benchmark::State& state) {
  GlobalConfig cfg;
  cfg.n_antennas = static_cast<int>(state.range(0));
  cfg.t_max = 2.0;  // plenty of room for larger arrays
  Rng rng(2);
  const Scenario sc = sample_scenario(cfg, rng);
  Apv apv;
  apv.t.resize(cfg.n_antennas);
  for (int m = 0; m < cfg.n_antennas; ++m) {
    apv.t[m] = rng.uniform(cfg.t_min, cfg.t_max);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(channel_vectors(apv, sc));
  }
}
BENCHMARK(BM_ChannelVectors)->Arg(4)->Arg(8);

void BM_SampleScenario(benchmark::State& state) {
  GlobalConfig cfg;
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_scenario(cfg, rng));
  }
}
BENCHMARK(BM_SampleScenario);

}  // namespace

BENCHMARK_MAIN();
