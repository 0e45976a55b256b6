#include <doctest.h>

#include <cmath>
#include <map>

#include "marsma/schemes.hpp"

using namespace marsma;

namespace {

Scenario tiny_scenario(std::uint64_t seed, int n_t = 2, int k = 2) {
  GlobalConfig cfg;
  cfg.n_antennas = n_t;
  cfg.n_users = k;
  cfg.n_paths = 2;
  Rng rng(seed);
  return sample_scenario(cfg, rng);
}

PsoConfig tiny_pso(std::uint64_t seed) {
  PsoConfig pso;
  pso.particles = 4;
  pso.iterations = 3;
  pso.restarts = 1;
  pso.seed = seed;
  return pso;
}

std::vector<Eigen::VectorXcd> random_channels(Rng& rng, int k, int n_t) {
  std::vector<Eigen::VectorXcd> h(k);
  for (auto& v : h) {
    v.resize(n_t);
    for (int m = 0; m < n_t; ++m) v[m] = rng.cgauss(1.0);
  }
  return h;
}

}  // namespace

TEST_CASE("scheme registry") {
  CHECK(all_schemes().size() == 8);
  for (SchemeId id : all_schemes()) {
    const auto parsed = parse_scheme(scheme_name(id));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == id);
  }
  CHECK(!parse_scheme("noma").has_value());
  CHECK(std::string(scheme_name(SchemeId::fpa_2rsma)) == "fpa_2rsma");
}

TEST_CASE("fixed-antenna grid") {
  GlobalConfig cfg;
  cfg.n_antennas = 4;
  const Apv grid = uniform_grid_apv(cfg);
  REQUIRE(grid.t.size() == 4);
  for (int m = 1; m < 4; ++m) {
    CHECK(grid.t[m] - grid.t[m - 1] ==
          doctest::Approx(0.5 * cfg.wavelength));
  }
  CHECK(grid.feasible(cfg));
}

TEST_CASE("random pairing") {
  SUBCASE("two users form the unique pair") {
    Rng rng(1);
    const Clustering c = random_clustering(2, rng);
    CHECK(c.n_clusters() == 1);
    CHECK(c.members[0].size() == 2);
  }

  SUBCASE("four users: all three pairings appear uniformly") {
    Rng rng(99);
    std::map<std::string, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const Clustering c = random_clustering(4, rng);
      // canonical key: partner of user 0
      int partner = -1;
      for (int u : c.members[c.cluster_of[0]]) {
        if (u != 0) partner = u;
      }
      counts[std::to_string(partner)]++;
    }
    REQUIRE(counts.size() == 3);
    for (const auto& [key, n] : counts) {
      CHECK(std::abs(n / double(draws) - 1.0 / 3.0) < 0.02);
    }
  }

  SUBCASE("odd count leaves one singleton; deterministic under a seed") {
    Rng rng1(7), rng2(7);
    const Clustering a = random_clustering(5, rng1);
    const Clustering b = random_clustering(5, rng2);
    CHECK(a.cluster_of == b.cluster_of);
    int singletons = 0;
    for (const auto& ms : a.members) singletons += ms.size() == 1 ? 1 : 0;
    CHECK(singletons == 1);
    CHECK(a.n_clusters() == 3);
  }
}

TEST_CASE("capacity-constrained k-means") {
  SUBCASE("two users, one cluster") {
    Rng rng(3);
    const auto h = random_channels(rng, 2, 3);
    Rng krng(5);
    const Clustering c = kmeans_clustering(h, 1, krng);
    CHECK(c.n_clusters() == 1);
    CHECK(c.members[0].size() == 2);
  }

  SUBCASE("well-separated direction groups are recovered") {
    // two tight direction bundles, two users each
    std::vector<Eigen::VectorXcd> h(4, Eigen::VectorXcd::Zero(2));
    h[0] << 1.0, 0.0;
    h[1] << 1.0, 0.02;
    h[2] << 0.0, 1.0;
    h[3] << 0.02, 1.0;
    Rng rng(11);
    const Clustering c = kmeans_clustering(h, 2, rng);
    CHECK(c.cluster_of[0] == c.cluster_of[1]);
    CHECK(c.cluster_of[2] == c.cluster_of[3]);
    CHECK(c.cluster_of[0] != c.cluster_of[2]);
  }

  SUBCASE("output always has pair/singleton shape") {
    Rng rng(13);
    for (int k = 2; k <= 7; ++k) {
      const auto h = random_channels(rng, k, 3);
      Rng krng(17 + k);
      const Clustering c = kmeans_clustering(h, (k + 1) / 2, krng);
      c.validate();
      CHECK(c.n_clusters() == (k + 1) / 2);
      int singletons = 0;
      for (const auto& ms : c.members) {
        CHECK(!ms.empty());
        CHECK(ms.size() <= 2);
        singletons += ms.size() == 1 ? 1 : 0;
      }
      CHECK(singletons == k % 2);
    }
  }
}

TEST_CASE("scheme dispatch") {
  SUBCASE("fixed-antenna schemes run exactly one inner solve") {
    const Scenario sc = tiny_scenario(21);
    const SchemeResult res = run_scheme(SchemeId::fpa_2rsma, sc, tiny_pso(1));
    CHECK(res.inner_evaluations == 1);
    CHECK(res.min_rate >= 0.0);
    CHECK(res.apv.t == uniform_grid_apv(sc.config).t);
  }

  SUBCASE("single-user SDMA attains the MRT rate at its final placement") {
    const Scenario sc = tiny_scenario(33, 2, 1);
    const SchemeResult res = run_scheme(SchemeId::ma_sdma, sc, tiny_pso(5));
    const Eigen::VectorXcd h =
        channel_vector(res.apv, sc.users[0], sc.config.wavelength);
    const double capacity = std::log2(
        1.0 + sc.config.p_max * h.squaredNorm() / sc.config.noise_power);
    CHECK(res.min_rate == doctest::Approx(capacity).epsilon(2e-3));
  }

  SUBCASE("two-layer dominates one-layer at a shared placement") {
    int wins = 0;
    const int n = 5;
    for (int trial = 0; trial < n; ++trial) {
      const Scenario sc = tiny_scenario(100 + trial, 3, 4);
      Rng rng(200 + trial);
      Apv apv;
      apv.t.resize(3);
      for (int m = 0; m < 3; ++m) apv.t[m] = rng.uniform(0.0, 1.0);
      InnerOptions two;
      InnerOptions one;
      one.mode = LayerMode::one_layer;
      const InnerResult rt = solve_inner(apv, sc, two);
      const InnerResult ro = solve_inner(apv, sc, one);
      if (rt.min_rate >= ro.min_rate - 2e-3) ++wins;
    }
    CHECK(wins >= n - 1);
  }

  SUBCASE("classic mode equals the proposed scheme when pruning is off") {
    const Scenario sc = tiny_scenario(55);
    PsoConfig pso = tiny_pso(7);
    pso.beta = 1.0;  // schedule degenerates to no pruning
    const SchemeResult a = run_scheme(SchemeId::proposed_dnppso, sc, pso);
    const SchemeResult b = run_scheme(SchemeId::classic_pso, sc, pso);
    CHECK(a.min_rate == b.min_rate);
    CHECK(a.apv.t == b.apv.t);
    CHECK(a.inner_evaluations == b.inner_evaluations);
  }

  SUBCASE("every scheme returns a fully feasible solution") {
    const Scenario sc = tiny_scenario(77);
    for (SchemeId id : all_schemes()) {
      const SchemeResult res = run_scheme(id, sc, tiny_pso(11));
      const auto violations = check_full_feasibility(
          res.apv, res.inner.beams, res.inner.alloc, res.inner.clustering, sc);
      CHECK_MESSAGE(violations.empty(), scheme_name(id));
      CHECK(res.min_rate >= 0.0);
    }
  }

  SUBCASE("scheme runs are deterministic in the seed") {
    const Scenario sc = tiny_scenario(88);
    const SchemeResult a = run_scheme(SchemeId::ma2_random, sc, tiny_pso(13));
    const SchemeResult b = run_scheme(SchemeId::ma2_random, sc, tiny_pso(13));
    CHECK(a.min_rate == b.min_rate);
    CHECK(a.apv.t == b.apv.t);
  }
}
