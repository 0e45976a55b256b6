#include <benchmark/benchmark.h>

#include "marsma/inner_solver.hpp"

namespace {

using namespace marsma;

void BM_SolveInner(benchmark::State& state) {
  GlobalConfig cfg;
  cfg.n_antennas = static_cast<int>(state.range(0));
  cfg.n_users = static_cast<int>(state.range(1));
  Rng rng(11);
  const Scenario sc = sample_scenario(cfg, rng);
  Apv apv;
  apv.t.resize(cfg.n_antennas);
  for (int m = 0; m < cfg.n_antennas; ++m) {
    apv.t[m] = rng.uniform(cfg.t_min, cfg.t_max);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_inner(apv, sc));
  }
}
BENCHMARK(BM_SolveInner)
    ->Args({2, 2})
    ->Args({4, 6})
    ->Unit(benchmark::kMillisecond);

void BM_SubproblemSolve(benchmark::State& state) {
  GlobalConfig cfg;
  Rng rng(13);
  const Scenario sc = sample_scenario(cfg, rng);
  Apv apv;
  apv.t.resize(cfg.n_antennas);
  for (int m = 0; m < cfg.n_antennas; ++m) {
    apv.t[m] = rng.uniform(cfg.t_min, cfg.t_max);
  }
  const auto h = channel_vectors(apv, sc);
  std::vector<int> assign(cfg.n_users);
  for (int k = 0; k < cfg.n_users; ++k) assign[k] = k / 2;
  const Clustering cl = Clustering::from_assignment(assign);
  const StreamLayout lay{cl.n_clusters(), cfg.n_users};
  BeamformerSet mrt = mrt_initialization(h, cfg.p_max);
  mrt.w_c1.assign(cl.n_clusters(), Eigen::VectorXcd::Zero(cfg.n_antennas));
  const auto lifted = lift_beamformers(mrt, lay);
  const ExpansionPoint e = expansion_point(h, lifted, cl, lay);
  const ConvexProgramDescription desc = build_subproblem(
      h, cl, e, cfg.noise_power, cfg.p_max, LayerMode::two_layer);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_convex(desc));
  }
}
BENCHMARK(BM_SubproblemSolve)->Unit(benchmark::kMillisecond);

}  // namespace
