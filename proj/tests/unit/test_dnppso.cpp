#include <doctest.h>

#include <cmath>

#include "marsma/dnppso.hpp"

using namespace marsma;

namespace {

GlobalConfig small_config() {
  GlobalConfig cfg;
  cfg.n_antennas = 3;
  cfg.n_users = 2;
  cfg.n_paths = 2;
  return cfg;
}

// Cheap deterministic surrogate: smooth multimodal landscape over the region,
// with the real spacing penalty applied. Used where the test is about swarm
// mechanics, not the inner solver.
FitnessFn surrogate_fitness(const GlobalConfig& cfg, double penalty) {
  return [cfg, penalty](const Apv& apv) {
    double value = 0.0;
    for (int m = 0; m < apv.t.size(); ++m) {
      value += std::sin(7.0 * apv.t[m] + 0.3 * m) + 0.2 * apv.t[m];
    }
    const int violations = spacing_violation_count(apv, cfg.d0);
    FitnessValue v;
    v.min_rate = value;
    v.fitness = value - penalty * violations;
    return v;
  };
}

}  // namespace

TEST_CASE("schedules") {
  PsoConfig cfg;
  cfg.particles = 50;
  cfg.iterations = 50;
  cfg.beta = 0.02;

  SUBCASE("inertia endpoints") {
    CHECK(inertia_schedule(cfg, 0) == doctest::Approx(cfg.omega_max));
    CHECK(inertia_schedule(cfg, cfg.iterations - 1) ==
          doctest::Approx(cfg.omega_min));
    const double mid = inertia_schedule(cfg, 25);
    CHECK(mid < cfg.omega_max);
    CHECK(mid > cfg.omega_min);
  }

  SUBCASE("active count goes from P down to max(round(beta P), 1)") {
    CHECK(active_count_schedule(cfg, 0) == 50);
    CHECK(active_count_schedule(cfg, cfg.iterations - 1) == 1);
    for (int i = 1; i < cfg.iterations; ++i) {
      CHECK(active_count_schedule(cfg, i) <= active_count_schedule(cfg, i - 1));
    }
  }

  SUBCASE("pruning disabled keeps the count constant") {
    PsoConfig classic = cfg;
    classic.prune_enabled = false;
    for (int i = 0; i < cfg.iterations; ++i) {
      CHECK(active_count_schedule(classic, i) == 50);
    }
  }

  SUBCASE("evaluation economics of the schedule") {
    const long classic = 50L * 50 + 50;
    long pruned = 50;  // initialization
    for (int i = 0; i < 50; ++i) pruned += active_count_schedule(cfg, i);
    CHECK(pruned <= 0.6 * classic);  // at least 40% fewer inner evaluations
  }

  SUBCASE("invalid configs rejected") {
    PsoConfig bad = cfg;
    bad.beta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.omega_min = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("particle updates") {
  const GlobalConfig gcfg = small_config();
  PsoConfig cfg;
  cfg.particles = 4;
  cfg.iterations = 5;

  SUBCASE("stationary at a consensus point") {
    Particle p;
    p.position.t = Eigen::VectorXd::Constant(3, 0.4);
    p.velocity.t = Eigen::VectorXd::Zero(3);
    p.pbest = p.position;
    const Apv gbest = p.position;
    update_particle(p, gbest, cfg, gcfg, 0.7, 0.3, 0.9);
    CHECK((p.position.t.array() == 0.4).all());
    CHECK(p.velocity.t.norm() == 0.0);
  }

  SUBCASE("positions are clamped into the region") {
    Particle p;
    p.position.t = Eigen::VectorXd::Constant(3, 0.9);
    p.velocity.t = Eigen::VectorXd::Constant(3, 10.0);
    p.pbest.t = Eigen::VectorXd::Constant(3, 1.0);
    Apv gbest;
    gbest.t = Eigen::VectorXd::Constant(3, 1.0);
    update_particle(p, gbest, cfg, gcfg, 0.9, 1.0, 1.0);
    for (int m = 0; m < 3; ++m) {
      CHECK(p.position.t[m] <= gcfg.t_max);
      CHECK(p.position.t[m] >= gcfg.t_min);
    }
    // velocity clamp: default cap is half the region span
    CHECK(p.velocity.t.cwiseAbs().maxCoeff() <=
          0.5 * (gcfg.t_max - gcfg.t_min) + 1e-12);
  }
}

TEST_CASE("swarm mechanics with a surrogate objective") {
  const GlobalConfig gcfg = small_config();
  const FitnessFn fitness = surrogate_fitness(gcfg, 20.0);

  SUBCASE("initial positions are inside the region; gbest is the arg max") {
    PsoConfig cfg;
    cfg.particles = 8;
    cfg.iterations = 3;
    cfg.seed = 5;
    Rng rng(cfg.seed);
    const SwarmState state = init_swarm(cfg, gcfg, fitness, rng);
    double best = -1e300;
    for (const Particle& p : state.particles) {
      for (int m = 0; m < p.position.t.size(); ++m) {
        CHECK(p.position.t[m] >= gcfg.t_min);
        CHECK(p.position.t[m] <= gcfg.t_max);
      }
      best = std::max(best, p.pbest_fitness);
    }
    CHECK(state.gbest_fitness == best);
    CHECK(state.evaluations == 8);
  }

  SUBCASE("single particle swarm holds its own best") {
    PsoConfig cfg;
    cfg.particles = 1;
    cfg.iterations = 2;
    cfg.seed = 9;
    Rng rng(cfg.seed);
    const SwarmState state = init_swarm(cfg, gcfg, fitness, rng);
    CHECK(state.gbest_fitness == state.particles[0].pbest_fitness);
  }

  SUBCASE("pruning removes the particles closest to gbest") {
    SwarmState state;
    state.particles.resize(3);
    state.gbest.t = Eigen::VectorXd::Zero(2);
    const double dists[3] = {0.5, 0.1, 0.9};
    for (int i = 0; i < 3; ++i) {
      state.particles[i].position.t = Eigen::VectorXd::Constant(2, dists[i]);
      state.particles[i].active = true;
    }
    CHECK(prune(state, 0) == 0);
    CHECK(prune(state, 1) == 1);
    CHECK(!state.particles[1].active);  // the 0.1-distance particle
    CHECK(state.particles[0].active);
    CHECK(state.particles[2].active);
  }

  SUBCASE("gbest fitness is non-decreasing and the schedule is obeyed") {
    PsoConfig cfg;
    cfg.particles = 10;
    cfg.iterations = 8;
    cfg.beta = 0.1;
    cfg.seed = 31;
    const OuterResult res = run_outer_with(fitness, gcfg, cfg);
    REQUIRE(res.trace.size() == 9);  // init row + one per iteration
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
      CHECK(res.trace[i].gbest_fitness >= res.trace[i - 1].gbest_fitness);
    }
    // active counts match the declared schedule (trace row i+1 logs the count
    // after pruning at the end of iteration i = the value for iteration i+1)
    for (int i = 0; i + 1 < cfg.iterations; ++i) {
      CHECK(res.trace[i + 1].active_count == active_count_schedule(cfg, i + 1));
    }
    // evaluation count = P + sum of the schedule
    long expect = cfg.particles;
    for (int i = 0; i < cfg.iterations; ++i) {
      expect += active_count_schedule(cfg, i);
    }
    CHECK(res.evaluations == expect);
  }

  SUBCASE("classic mode evaluates exactly P*I + P times") {
    PsoConfig cfg;
    cfg.particles = 7;
    cfg.iterations = 6;
    cfg.prune_enabled = false;
    cfg.seed = 13;
    const OuterResult res = run_outer_with(fitness, gcfg, cfg);
    CHECK(res.evaluations == 7 * 6 + 7);
  }

  SUBCASE("same seed gives identical trajectories") {
    PsoConfig cfg;
    cfg.particles = 6;
    cfg.iterations = 5;
    cfg.seed = 77;
    const OuterResult a = run_outer_with(fitness, gcfg, cfg);
    const OuterResult b = run_outer_with(fitness, gcfg, cfg);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      CHECK(a.trace[i].gbest_fitness == b.trace[i].gbest_fitness);
      CHECK(a.trace[i].cum_evals == b.trace[i].cum_evals);
    }
    CHECK(a.best_apv.t == b.best_apv.t);
  }
}

TEST_CASE("penalized fitness on the real inner solver") {
  GlobalConfig cfg = small_config();
  Rng rng(41);
  const Scenario sc = sample_scenario(cfg, rng);
  const InnerOptions inner;

  SUBCASE("feasible placements get the raw min rate") {
    Apv apv;
    apv.t.resize(3);
    apv.t << 0.0, 0.3, 0.8;
    const FitnessValue v = evaluate_fitness(apv, sc, inner, 20.0);
    CHECK(v.fitness == v.min_rate);
    CHECK(v.fitness >= 0.0);
  }

  SUBCASE("spacing violations subtract the penalty per offending antenna") {
    Apv apv;
    apv.t.resize(3);
    apv.t << 0.0, 0.02, 0.5;  // antennas 0 and 1 violate d0 = 0.05
    const FitnessValue v = evaluate_fitness(apv, sc, inner, 20.0);
    CHECK(spacing_violation_count(apv, cfg.d0) == 2);
    CHECK(v.fitness == doctest::Approx(v.min_rate - 2 * 20.0));
    CHECK(v.fitness < 0.0);  // the penalty separates infeasible placements
  }

  SUBCASE("small real outer run improves on its starting point") {
    PsoConfig pso;
    pso.particles = 4;
    pso.iterations = 3;
    pso.restarts = 1;
    pso.seed = 3;
    const OuterResult res = run_outer(sc, pso, inner);
    CHECK(res.best_fitness >= res.trace.front().gbest_fitness);
    CHECK(res.best_apv.feasible(cfg));
    CHECK(res.best_inner.min_rate == doctest::Approx(res.best_fitness));
    long expect = pso.particles;
    for (int i = 0; i < pso.iterations; ++i) {
      expect += active_count_schedule(pso, i);
    }
    CHECK(res.evaluations == expect);
  }
}
