#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "marsma/inner_solver.hpp"

namespace marsma {

struct PsoConfig {
  int particles = 50;      // P
  int iterations = 50;     // I
  double c1 = 1.4;         // personal learning factor
  double c2 = 1.4;         // global learning factor
  double omega_min = 0.4;
  double omega_max = 0.9;
  double penalty = 20.0;   // tau, spacing-violation penalty weight
  double beta = 0.02;      // final active fraction
  double v_max = -1.0;     // per-coordinate velocity clamp; <=0 picks
                           // (t_max - t_min)/2
  bool prune_enabled = true;
  int restarts = 3;  // independent swarms per run, best kept
  std::uint64_t seed = 1;

  void validate() const;
};

// Inertia decreases linearly from omega_max at iteration 0 to omega_min at
// iteration I-1.
double inertia_schedule(const PsoConfig& cfg, int iteration);

// Active particle count at iteration i: linear from P down to
// max(round(beta*P), 1), rounded to nearest. Constant P when pruning is off.
int active_count_schedule(const PsoConfig& cfg, int iteration);

struct Particle {
  Apv position;
  Apv velocity;
  Apv pbest;
  double pbest_fitness = 0.0;
  bool active = true;
};

struct SwarmState {
  std::vector<Particle> particles;
  Apv gbest;
  double gbest_fitness = 0.0;
  int gbest_index = 0;         // particle that produced the current gbest
  InnerResult gbest_inner;     // inner design cached at the last gbest update
  long long evaluations = 0;
};

// Fitness of one placement together with the inner design that produced it.
struct FitnessValue {
  double fitness = 0.0;
  double min_rate = 0.0;
  InnerResult inner;
};

using FitnessFn = std::function<FitnessValue(const Apv&)>;

// Penalized fitness of Algorithm-2 style search: the inner min-rate minus
// penalty * (number of antennas violating the spacing constraint). The inner
// problem is solved even at spacing-infeasible placements.
FitnessValue evaluate_fitness(const Apv& apv, const Scenario& scenario,
                              const InnerOptions& inner_opts, double penalty);

// Uniform positions, zero velocities, fitness of every particle, pbest/gbest
// bookkeeping. Evaluations may run concurrently; randoms are drawn up front.
SwarmState init_swarm(const PsoConfig& cfg, const GlobalConfig& gcfg,
                      const FitnessFn& fitness, Rng& rng);

// Velocity/position update of one particle with per-update scalar random
// factors; positions are clamped back into [t_min, t_max].
void update_particle(Particle& p, const Apv& gbest, const PsoConfig& cfg,
                     const GlobalConfig& gcfg, double omega, double tau1,
                     double tau2);

// Deactivates the n active particles closest to gbest (ties broken by index).
// Deactivation is permanent. Returns how many were deactivated.
int prune(SwarmState& state, int n);

struct TraceRow {
  int iteration = 0;  // 0 is the post-initialization state
  double gbest_fitness = 0.0;
  int active_count = 0;
  long long cum_evals = 0;
};

struct OuterResult {
  Apv best_apv;
  double best_fitness = 0.0;
  InnerResult best_inner;
  long long evaluations = 0;
  std::vector<TraceRow> trace;  // of the winning restart
};

// Full outer loop on an injected fitness (the seam tests and schemes use).
OuterResult run_outer_with(const FitnessFn& fitness, const GlobalConfig& gcfg,
                           const PsoConfig& cfg);

// Algorithm-2 outer loop over antenna placements; restarts rerun the swarm
// with derived seeds and the best run wins.
OuterResult run_outer(const Scenario& scenario, const PsoConfig& cfg,
                      const InnerOptions& inner_opts = {});

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace marsma
