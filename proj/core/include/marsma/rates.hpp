#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "marsma/channel.hpp"

namespace marsma {

// Partition of users into disjoint clusters.
struct Clustering {
  std::vector<int> cluster_of;            // user -> cluster index
  std::vector<std::vector<int>> members;  // cluster -> user list

  int n_users() const { return static_cast<int>(cluster_of.size()); }
  int n_clusters() const { return static_cast<int>(members.size()); }

  // Disjoint, covering, no empty cluster, consistent maps. Throws otherwise.
  void validate() const;

  static Clustering from_assignment(std::vector<int> cluster_of);
};

// Beamforming vectors of the 1 + Q + K streams.
struct BeamformerSet {
  Eigen::VectorXcd w_c2;                // inter-cluster common stream
  std::vector<Eigen::VectorXcd> w_c1;   // per cluster
  std::vector<Eigen::VectorXcd> w_p;    // per user

  double total_power() const;
  static BeamformerSet zeros(int n_t, int n_clusters, int n_users);
};

// Portions of the common rates granted to each user.
struct RateAllocation {
  Eigen::VectorXd r_c2;  // per user
  Eigen::VectorXd r_c1;  // per user (its own cluster's common stream)

  static RateAllocation zeros(int n_users);
};

// Per-user SINRs and rates plus the common-rate bookkeeping.
struct RateReport {
  Eigen::VectorXd gamma_c2, gamma_c1, gamma_p;  // linear SINRs
  Eigen::VectorXd rate_c2, rate_c1, rate_p;     // bits/s/Hz
  double common_rate_c2 = 0.0;                  // min_k rate_c2[k]
  Eigen::VectorXd common_rate_c1;               // per cluster
  Eigen::VectorXd total;                        // per user, needs an allocation
  double min_rate = 0.0;

  std::string to_json() const;
};

// Closed-form SINRs of the two-layer SIC chain and the per-user rates
// log2(1 + sinr). Denominators are bounded below by the noise power, so the
// expressions are total for any beamformer set.
RateReport evaluate_sinrs(std::span<const Eigen::VectorXcd> channels,
                          const BeamformerSet& beams, const Clustering& clustering,
                          double noise_power);

// Common stream rates are pinned by their weakest intended receiver.
// Fills report.common_rate_c2 / common_rate_c1 and returns them.
// Throws on an empty cluster.
std::pair<double, Eigen::VectorXd> common_rates(RateReport& report,
                                                const Clustering& clustering);

// Per-user totals r_c2 + r_c1 + rate_p and their minimum. The allocation must
// respect the report's common-rate budgets; infeasible allocations throw
// rather than being clipped.
std::pair<Eigen::VectorXd, double> total_user_rates(RateReport& report,
                                                    const RateAllocation& alloc,
                                                    const Clustering& clustering);

// evaluate_sinrs + common_rates + total_user_rates in one call.
RateReport rate_report(std::span<const Eigen::VectorXcd> channels,
                       const BeamformerSet& beams, const RateAllocation& alloc,
                       const Clustering& clustering, double noise_power);

struct Violation {
  std::string constraint;  // "bounds", "spacing", "partition", "power",
                           // "rate_sum_c2", "rate_sum_c1", "rate_negative"
  double magnitude = 0.0;  // how far past the tolerance
  std::string detail;
};

// Checks region bounds, pairwise spacing, partition validity, the power
// budget and the common-rate sums of a full solution. Empty result means
// feasible within tolerances (power: 1e-6 relative; bounds/spacing: 1e-9 m;
// rate sums and nonnegativity: 1e-6).
std::vector<Violation> check_full_feasibility(const Apv& apv,
                                              const BeamformerSet& beams,
                                              const RateAllocation& alloc,
                                              const Clustering& clustering,
                                              const Scenario& scenario);

}  // namespace marsma
