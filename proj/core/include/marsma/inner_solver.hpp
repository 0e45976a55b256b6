#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "marsma/ipm.hpp"
#include "marsma/subproblem.hpp"

namespace marsma {

enum class ClusteringKind { greedy, kmeans, random };

struct InnerOptions {
  LayerMode mode = LayerMode::two_layer;
  ClusteringKind clustering = ClusteringKind::greedy;
  std::uint64_t cluster_seed = 0;  // consumed by kmeans/random clustering
  double sca_eps = 1e-3;           // SCA stop threshold on the slack
  int sca_max_iters = 20;
  SolverOptions solver;
  // Intermediate iterates only feed the next expansion, so they are solved to
  // this looser gap; the final subproblem is re-solved at solver.gap_target
  // before rank-one recovery.
  double mid_gap = 3e-3;
};

// MRT start: common streams zero, private streams aligned with their user's
// channel at an equal power split, meeting the budget with equality.
BeamformerSet mrt_initialization(std::span<const Eigen::VectorXcd> channels,
                                 double p_max);

// Exact lifting w -> w w^H of a beamformer set into matrix slots.
std::vector<Eigen::MatrixXcd> lift_beamformers(const BeamformerSet& beams,
                                               const StreamLayout& layout);

struct ScaResult {
  LiftedSolution final_solution;
  std::vector<double> z_trajectory;  // slack per iterate, starting at the init
  int iterations = 0;                // subproblems actually solved
  bool solver_fallback = false;      // some iterate kept the previous solution
};

// Builds and solves the sequence of convexified subproblems from the MRT
// start, re-expanding at each returned solution, until the slack improves by
// less than sca_eps or the iteration cap is reached.
ScaResult sca_solve(std::span<const Eigen::VectorXcd> channels,
                    const Clustering& clustering, double noise_power,
                    double p_max, const InnerOptions& opts = {});

// Principal eigenpair truncation: returns sqrt(lambda_1) * v_1 and the
// ratio lambda_2 / lambda_1 (zero for a zero matrix).
std::pair<Eigen::VectorXcd, double> rank_one_recovery(const Eigen::MatrixXcd& w);

struct ReconcileResult {
  RateAllocation alloc;
  double min_rate = 0.0;
  RateReport report;
};

// Recomputes the common-rate budgets on the recovered vectors and, when
// finite-precision recovery left an allocation group over budget, scales that
// group down proportionally before computing the totals.
ReconcileResult reconcile_allocation(std::span<const Eigen::VectorXcd> channels,
                                     const BeamformerSet& beams,
                                     const RateAllocation& relaxed,
                                     const Clustering& clustering,
                                     double noise_power);

struct InnerResult {
  Clustering clustering;
  BeamformerSet beams;
  RateAllocation alloc;
  double min_rate = 0.0;     // achieved on the recovered vectors
  double relaxation_z = 0.0; // lifted slack at the last SCA iterate
  int sca_iterations = 0;
  bool solver_fallback = false;
  std::vector<double> z_trajectory;
  std::vector<double> rank_ratios;  // lambda_2/lambda_1 per active matrix
};

// Full inner pipeline for a fixed antenna placement: channels, clustering,
// SCA over lifted subproblems, rank-one recovery, allocation reconciliation.
// Deterministic in its inputs.
InnerResult solve_inner(const Apv& apv, const Scenario& scenario,
                        const InnerOptions& opts = {});

}  // namespace marsma
