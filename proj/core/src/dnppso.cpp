#include "marsma/dnppso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "marsma/parallel.hpp"

namespace marsma {

void PsoConfig::validate() const {
  if (particles < 1) throw std::invalid_argument("particles must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta in (0, 1]");
  if (!(omega_max >= omega_min && omega_min > 0.0)) {
    throw std::invalid_argument("need omega_max >= omega_min > 0");
  }
  if (penalty <= 0.0) throw std::invalid_argument("penalty must be positive");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
}

double inertia_schedule(const PsoConfig& cfg, int iteration) {
  if (cfg.iterations <= 1) return cfg.omega_max;
  const double frac = static_cast<double>(iteration) / (cfg.iterations - 1);
  return cfg.omega_max - (cfg.omega_max - cfg.omega_min) * frac;
}

int active_count_schedule(const PsoConfig& cfg, int iteration) {
  if (!cfg.prune_enabled) return cfg.particles;
  const int floor_count =
      std::max(1, static_cast<int>(std::lround(cfg.beta * cfg.particles)));
  if (cfg.iterations <= 1) return cfg.particles;
  const double frac = static_cast<double>(iteration) / (cfg.iterations - 1);
  const double value = cfg.particles - (cfg.particles - cfg.beta * cfg.particles) * frac;
  return std::max(static_cast<int>(std::lround(value)), floor_count);
}

FitnessValue evaluate_fitness(const Apv& apv, const Scenario& scenario,
                              const InnerOptions& inner_opts, double penalty) {
  FitnessValue v;
  v.inner = solve_inner(apv, scenario, inner_opts);
  v.min_rate = v.inner.min_rate;
  const int violators = spacing_violation_count(apv, scenario.config.d0);
  v.fitness = v.min_rate - penalty * violators;
  return v;
}

namespace {

// Evaluates fitness for the flagged particles concurrently and applies
// pbest/gbest updates in particle order (synchronous swarm semantics).
void evaluate_and_update(SwarmState& state, const std::vector<int>& todo,
                         const FitnessFn& fitness, bool first_pass) {
  std::vector<FitnessValue> values(todo.size());
  parallel_for(static_cast<int>(todo.size()), [&](int i) {
    values[i] = fitness(state.particles[todo[i]].position);
  });
  state.evaluations += static_cast<long long>(todo.size());
  for (std::size_t i = 0; i < todo.size(); ++i) {
    Particle& p = state.particles[todo[i]];
    FitnessValue& v = values[i];
    if (first_pass || v.fitness > p.pbest_fitness) {
      p.pbest = p.position;
      p.pbest_fitness = v.fitness;
    }
    const bool improves = v.fitness > state.gbest_fitness;
    if ((first_pass && todo[i] == 0) || improves) {
      state.gbest = p.position;
      state.gbest_fitness = v.fitness;
      state.gbest_index = todo[i];
      state.gbest_inner = std::move(v.inner);
    }
  }
}

}  // namespace

SwarmState init_swarm(const PsoConfig& cfg, const GlobalConfig& gcfg,
                      const FitnessFn& fitness, Rng& rng) {
  cfg.validate();
  SwarmState state;
  state.particles.resize(cfg.particles);
  const int n_t = gcfg.n_antennas;
  for (Particle& p : state.particles) {
    p.position.t.resize(n_t);
    for (int m = 0; m < n_t; ++m) {
      p.position.t[m] = rng.uniform(gcfg.t_min, gcfg.t_max);
    }
    p.velocity.t = Eigen::VectorXd::Zero(n_t);
    p.active = true;
  }
  std::vector<int> all(cfg.particles);
  for (int i = 0; i < cfg.particles; ++i) all[i] = i;
  evaluate_and_update(state, all, fitness, /*first_pass=*/true);
  return state;
}

void update_particle(Particle& p, const Apv& gbest, const PsoConfig& cfg,
                     const GlobalConfig& gcfg, double omega, double tau1,
                     double tau2) {
  const double v_cap =
      cfg.v_max > 0.0 ? cfg.v_max : 0.5 * (gcfg.t_max - gcfg.t_min);
  p.velocity.t = omega * p.velocity.t + cfg.c1 * tau1 * (p.pbest.t - p.position.t) +
                 cfg.c2 * tau2 * (gbest.t - p.position.t);
  p.velocity.t = p.velocity.t.cwiseMax(-v_cap).cwiseMin(v_cap);
  p.position.t = (p.position.t + p.velocity.t)
                     .cwiseMax(gcfg.t_min)
                     .cwiseMin(gcfg.t_max);
}

int prune(SwarmState& state, int n) {
  if (n <= 0) return 0;
  std::vector<std::pair<double, int>> dist;
  for (int i = 0; i < static_cast<int>(state.particles.size()); ++i) {
    if (!state.particles[i].active) continue;
    dist.emplace_back((state.particles[i].position.t - state.gbest.t).norm(), i);
  }
  std::sort(dist.begin(), dist.end());
  const int count = std::min<int>(n, static_cast<int>(dist.size()));
  for (int i = 0; i < count; ++i) {
    state.particles[dist[i].second].active = false;
  }
  return count;
}

OuterResult run_outer_with(const FitnessFn& fitness, const GlobalConfig& gcfg,
                           const PsoConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SwarmState state = init_swarm(cfg, gcfg, fitness, rng);

  OuterResult out;
  out.trace.push_back({0, state.gbest_fitness,
                       static_cast<int>(state.particles.size()),
                       state.evaluations});

  for (int i = 0; i < cfg.iterations; ++i) {
    const double omega = inertia_schedule(cfg, i);

    // velocity/position updates read the previous iteration's gbest; all
    // randoms are drawn here, sequentially, before any evaluation runs
    std::vector<int> todo;
    for (int p = 0; p < cfg.particles; ++p) {
      if (!state.particles[p].active) continue;
      const double tau1 = rng.uniform();
      const double tau2 = rng.uniform();
      update_particle(state.particles[p], state.gbest, cfg, gcfg, omega, tau1,
                      tau2);
      todo.push_back(p);
    }
    evaluate_and_update(state, todo, fitness, /*first_pass=*/false);

    if (cfg.prune_enabled && i + 1 < cfg.iterations) {
      const int next_active = active_count_schedule(cfg, i + 1);
      prune(state, static_cast<int>(todo.size()) - next_active);
    }
    int active_now = 0;
    for (const Particle& p : state.particles) active_now += p.active ? 1 : 0;
    out.trace.push_back({i + 1, state.gbest_fitness, active_now,
                         state.evaluations});
  }

  out.best_apv = state.gbest;
  out.best_fitness = state.gbest_fitness;
  out.best_inner = std::move(state.gbest_inner);
  out.evaluations = state.evaluations;
  return out;
}

OuterResult run_outer(const Scenario& scenario, const PsoConfig& cfg,
                      const InnerOptions& inner_opts) {
  cfg.validate();
  OuterResult best;
  long long total_evals = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    PsoConfig run_cfg = cfg;
    run_cfg.seed = cfg.restarts == 1 ? cfg.seed
                                     : derive_seed(cfg.seed, {0x5157, (std::uint64_t)r});
    const FitnessFn fitness = [&](const Apv& apv) {
      return evaluate_fitness(apv, scenario, inner_opts, cfg.penalty);
    };
    OuterResult run = run_outer_with(fitness, scenario.config, run_cfg);
    total_evals += run.evaluations;
    if (r == 0 || run.best_fitness > best.best_fitness) {
      best = std::move(run);
    }
  }
  best.evaluations = total_evals;
  return best;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "iteration,gbest_fitness,active_count,cum_evals\n";
  char buf[64];
  for (const TraceRow& r : trace) {
    std::snprintf(buf, sizeof(buf), "%.6g", r.gbest_fitness);
    os << r.iteration << ',' << buf << ',' << r.active_count << ','
       << r.cum_evals << '\n';
  }
}

}  // namespace marsma
