#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "marsma/rates.hpp"

namespace marsma {

// Which stream layers participate in the design. One-layer drops the
// intra-cluster common streams; SDMA keeps private streams only. Both are
// restrictions of the same program (frozen variable blocks, dropped rows),
// never separate formulations.
enum class LayerMode { two_layer, one_layer, sdma };

const char* layer_mode_name(LayerMode mode);

// Index map of the lifted matrix variables: slot 0 is the inter-cluster
// common stream, slots 1..Q the intra-cluster streams, slots 1+Q..Q+K the
// private streams.
struct StreamLayout {
  int n_clusters = 0;
  int n_users = 0;

  int total() const { return 1 + n_clusters + n_users; }
  int inter() const { return 0; }
  int intra(int q) const { return 1 + q; }
  int priv(int k) const { return 1 + n_clusters + k; }
};

// Solution of the lifted program: one Hermitian PSD matrix per stream, the
// common-rate allocation, and the min-rate slack.
struct LiftedSolution {
  std::vector<Eigen::MatrixXcd> w_mat;
  RateAllocation alloc;
  double z = 0.0;
};

// Quadratic forms of one user's channel against partial sums of the lifted
// matrices: lambda_c2 over all streams, lambda_c1 minus the inter-common,
// lambda_p additionally minus the own intra-common, phi_p additionally minus
// the own private stream.
struct LinearForms {
  double lambda_c2 = 0.0;
  double lambda_c1 = 0.0;
  double lambda_p = 0.0;
  double phi_p = 0.0;
};

LinearForms linear_forms(const Eigen::VectorXcd& h,
                         std::span<const Eigen::MatrixXcd> w_mat, int user_k,
                         int cluster_of_k, const StreamLayout& layout);

// Values the convex terms are linearized around, one triple per user.
struct ExpansionPoint {
  Eigen::VectorXd lambda_c1;
  Eigen::VectorXd lambda_p;
  Eigen::VectorXd phi_p;
};

ExpansionPoint expansion_point(std::span<const Eigen::VectorXcd> channels,
                               std::span<const Eigen::MatrixXcd> w_mat,
                               const Clustering& clustering,
                               const StreamLayout& layout);

// Affine minorant of -log2(lambda + noise) tangent at lambda_j.
double taylor_lower_bound(double lambda, double lambda_j, double noise_power);

// One scalar constraint of the subproblem, in the normal form
//   has_log * log2(sum_i s_log[i] * h_u^H W_i h_u + noise)
//   + sum_i s_lin[i] * h_u^H W_i h_u + a_r . [r_c2; r_c1] + a_z * z + c0 >= 0.
struct ProgramRow {
  std::string name;
  int user = 0;
  bool has_log = true;
  std::vector<double> s_log;  // per matrix slot
  std::vector<double> s_lin;  // per matrix slot
  Eigen::VectorXd a_r;        // 2K scalar-rate coefficients
  double a_z = 0.0;
  double c0 = 0.0;
};

// Solver-agnostic statement of the per-iteration convex program: maximize z
// over PSD matrices (active slots only) and nonnegative rate variables,
// subject to the trace power budget and the rows above.
struct ConvexProgramDescription {
  int n_t = 0;
  int n_users = 0;
  int n_clusters = 0;
  double noise_power = 0.0;
  double p_max = 0.0;
  LayerMode mode = LayerMode::two_layer;
  std::vector<int> cluster_of;
  std::vector<Eigen::VectorXcd> channels;
  std::vector<char> matrix_active;  // per matrix slot
  std::vector<char> rate_active;    // [r_c2 (K); r_c1 (K)]
  std::vector<ProgramRow> rows;

  StreamLayout layout() const { return {n_clusters, n_users}; }
  void validate() const;
};

// Assembles the program for one SCA iteration: the concave log2 terms stay
// exact, the convex ones are replaced by their tangent minorants at the
// expansion point, and the rank-one constraint is dropped.
ConvexProgramDescription build_subproblem(std::span<const Eigen::VectorXcd> channels,
                                          const Clustering& clustering,
                                          const ExpansionPoint& expansion,
                                          double noise_power, double p_max,
                                          LayerMode mode = LayerMode::two_layer);

// Human-readable dump, exact to the last bit; parse_program(dump_program(d))
// reproduces d.
std::string dump_program(const ConvexProgramDescription& desc);
ConvexProgramDescription parse_program(const std::string& text);

// Independent residual check of a solution against the description, done
// with plain complex arithmetic rather than the solver's internal packing.
struct ResidualReport {
  double worst_row = 0.0;        // most negative row value (0 when all hold)
  double power_excess_rel = 0.0; // relative trace-budget overshoot
  double min_eigenvalue = 0.0;   // over all active matrices
  double worst_rate = 0.0;       // most negative rate variable

  bool ok(double row_tol = 1e-6, double power_tol = 1e-6,
          double eig_tol = 1e-7) const;
};

ResidualReport verify_solution(const ConvexProgramDescription& desc,
                               const LiftedSolution& sol);

// Row values at a candidate point, smallest first; used for feasibility
// margins. Returns the minimum over all rows of the row value.
double min_row_value(const ConvexProgramDescription& desc,
                     const LiftedSolution& sol);

}  // namespace marsma
