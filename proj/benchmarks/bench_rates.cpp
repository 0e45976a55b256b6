#include <benchmark/benchmark.h>

#include "marsma/clustering.hpp"
#include "marsma/rates.hpp"

namespace {

using namespace marsma;

struct Fixture {
  std::vector<Eigen::VectorXcd> h;
  BeamformerSet beams;
  Clustering clustering;
};

Fixture make_fixture(int n_t, int k_users) {
  Rng rng(7);
  Fixture f;
  f.h.resize(k_users);
  for (auto& v : f.h) {
    v.resize(n_t);
    for (int m = 0; m < n_t; ++m) v[m] = rng.cgauss(1.0);
  }
  std::vector<int> assign(k_users);
  for (int k = 0; k < k_users; ++k) assign[k] = k / 2;
  f.clustering = Clustering::from_assignment(assign);
  f.beams = BeamformerSet::zeros(n_t, f.clustering.n_clusters(), k_users);
  auto fill = [&rng, n_t](Eigen::VectorXcd& w) {
    for (int m = 0; m < n_t; ++m) w[m] = rng.cgauss(0.1);
  };
  fill(f.beams.w_c2);
  for (auto& w : f.beams.w_c1) fill(w);
  for (auto& w : f.beams.w_p) fill(w);
  return f;
}

void BM_EvaluateSinrs(benchmark::State& state) {
  const Fixture f = make_fixture(4, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_sinrs(f.h, f.beams, f.clustering, 1e-3));
  }
}
BENCHMARK(BM_EvaluateSinrs)->Arg(4)->Arg(8);

void BM_GreedyPairClustering(benchmark::State& state) {
  const Fixture f = make_fixture(4, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(greedy_pair_clustering(f.h));
  }
}
BENCHMARK(BM_GreedyPairClustering)->Arg(6)->Arg(12);

}  // namespace
