#pragma once

#include <optional>
#include <string>

#include "marsma/subproblem.hpp"

namespace marsma {

struct SolverOptions {
  // Contractual accuracy on the returned objective (the SCA epsilon).
  double accuracy = 1e-3;
  // Barrier gap the path following actually drives to; kept well below the
  // contractual accuracy so rank-one recovery sees clean spectra.
  double gap_target = 1e-6;
  double t_init = 1.0;
  // Barrier gap the supplied warm start was centered at. When set, the path
  // starts at the matching barrier weight instead of t_warm, so the warm
  // point sits on the new path instead of in the slow pull-back regime.
  double warm_gap = 0.0;
  double t_warm = 2e3;         // starting barrier weight for unrated warm starts
  double mu = 30.0;            // barrier parameter growth per stage
  int max_newton_per_stage = 25;
  int max_stages = 40;
  double newton_tol = 1e-10;   // final-stage stop on decrement^2/2
};

struct ConvexSolveResult {
  LiftedSolution solution;
  bool ok = false;
  std::string status;       // "optimal", "stalled", "infeasible", "empty"
  double gap_bound = 0.0;   // barrier bound nu/t at the returned point
  int newton_steps = 0;
  // Moderately centered interior iterate, a better warm start than the
  // near-boundary final solution, and the gap it was centered at.
  std::optional<LiftedSolution> centered;
  double centered_gap = 0.0;
};

// Solves the subproblem with a log-barrier interior-point method: log-det
// barriers on the PSD blocks, log barriers on the scalar rows, damped Newton
// on the composite objective, and a slack phase I when no strictly feasible
// start is supplied or the supplied one has no margin.
ConvexSolveResult solve_convex(const ConvexProgramDescription& desc,
                               const SolverOptions& opts = {},
                               const LiftedSolution* warm = nullptr);

}  // namespace marsma
