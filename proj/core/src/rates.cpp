#include "marsma/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace marsma {

namespace {

double abs2(const std::complex<double>& z) { return std::norm(z); }

double log2_1p(double x) { return std::log2(1.0 + x); }

}  // namespace

void Clustering::validate() const {
  const int k = n_users();
  const int q = n_clusters();
  if (k == 0) throw std::invalid_argument("clustering has no users");
  std::vector<int> seen(k, 0);
  for (int c = 0; c < q; ++c) {
    if (members[c].empty()) throw std::invalid_argument("empty cluster");
    for (int u : members[c]) {
      if (u < 0 || u >= k) throw std::invalid_argument("user index out of range");
      if (seen[u]++) throw std::invalid_argument("user assigned twice");
      if (cluster_of[u] != c) throw std::invalid_argument("inconsistent cluster map");
    }
  }
  for (int u = 0; u < k; ++u) {
    if (!seen[u]) throw std::invalid_argument("user not covered by any cluster");
  }
}

Clustering Clustering::from_assignment(std::vector<int> cluster_of) {
  Clustering c;
  c.cluster_of = std::move(cluster_of);
  int q = 0;
  for (int v : c.cluster_of) q = std::max(q, v + 1);
  c.members.resize(q);
  for (int u = 0; u < static_cast<int>(c.cluster_of.size()); ++u) {
    c.members[c.cluster_of[u]].push_back(u);
  }
  c.validate();
  return c;
}

double BeamformerSet::total_power() const {
  double p = w_c2.squaredNorm();
  for (const auto& w : w_c1) p += w.squaredNorm();
  for (const auto& w : w_p) p += w.squaredNorm();
  return p;
}

BeamformerSet BeamformerSet::zeros(int n_t, int n_clusters, int n_users) {
  BeamformerSet b;
  b.w_c2 = Eigen::VectorXcd::Zero(n_t);
  b.w_c1.assign(n_clusters, Eigen::VectorXcd::Zero(n_t));
  b.w_p.assign(n_users, Eigen::VectorXcd::Zero(n_t));
  return b;
}

RateAllocation RateAllocation::zeros(int n_users) {
  RateAllocation a;
  a.r_c2 = Eigen::VectorXd::Zero(n_users);
  a.r_c1 = Eigen::VectorXd::Zero(n_users);
  return a;
}

RateReport evaluate_sinrs(std::span<const Eigen::VectorXcd> channels,
                          const BeamformerSet& beams, const Clustering& clustering,
                          double noise_power) {
  if (noise_power <= 0.0) throw std::invalid_argument("noise power must be positive");
  const int k_users = static_cast<int>(channels.size());
  if (clustering.n_users() != k_users) {
    throw std::invalid_argument("clustering size does not match channel count");
  }
  const int q_clusters = clustering.n_clusters();
  if (static_cast<int>(beams.w_c1.size()) != q_clusters ||
      static_cast<int>(beams.w_p.size()) != k_users) {
    throw std::invalid_argument("beamformer set does not match clustering");
  }

  RateReport rep;
  rep.gamma_c2.resize(k_users);
  rep.gamma_c1.resize(k_users);
  rep.gamma_p.resize(k_users);
  rep.rate_c2.resize(k_users);
  rep.rate_c1.resize(k_users);
  rep.rate_p.resize(k_users);

  for (int k = 0; k < k_users; ++k) {
    const Eigen::VectorXcd& h = channels[k];
    const int q = clustering.cluster_of[k];

    double intra_sum = 0.0;
    for (int c = 0; c < q_clusters; ++c) intra_sum += abs2(h.dot(beams.w_c1[c]));
    double private_sum = 0.0;
    for (int j = 0; j < k_users; ++j) private_sum += abs2(h.dot(beams.w_p[j]));

    const double interference = intra_sum + private_sum + noise_power;
    const double own_intra = abs2(h.dot(beams.w_c1[q]));
    const double own_private = abs2(h.dot(beams.w_p[k]));

    rep.gamma_c2[k] = abs2(h.dot(beams.w_c2)) / interference;
    rep.gamma_c1[k] = own_intra / (interference - own_intra);
    rep.gamma_p[k] = own_private / (interference - own_intra - own_private);

    rep.rate_c2[k] = log2_1p(rep.gamma_c2[k]);
    rep.rate_c1[k] = log2_1p(rep.gamma_c1[k]);
    rep.rate_p[k] = log2_1p(rep.gamma_p[k]);
  }
  return rep;
}

std::pair<double, Eigen::VectorXd> common_rates(RateReport& report,
                                                const Clustering& clustering) {
  if (report.rate_c2.size() != clustering.n_users()) {
    throw std::invalid_argument("report does not cover all users");
  }
  report.common_rate_c2 = report.rate_c2.minCoeff();
  report.common_rate_c1.resize(clustering.n_clusters());
  for (int q = 0; q < clustering.n_clusters(); ++q) {
    const auto& ms = clustering.members[q];
    if (ms.empty()) throw std::invalid_argument("empty cluster");
    double lo = std::numeric_limits<double>::infinity();
    for (int u : ms) lo = std::min(lo, report.rate_c1[u]);
    report.common_rate_c1[q] = lo;
  }
  return {report.common_rate_c2, report.common_rate_c1};
}

std::pair<Eigen::VectorXd, double> total_user_rates(RateReport& report,
                                                    const RateAllocation& alloc,
                                                    const Clustering& clustering) {
  const int k_users = clustering.n_users();
  constexpr double kRateTol = 1e-6;
  if (alloc.r_c2.size() != k_users || alloc.r_c1.size() != k_users) {
    throw std::invalid_argument("allocation size mismatch");
  }
  if (alloc.r_c2.minCoeff() < -kRateTol || alloc.r_c1.minCoeff() < -kRateTol) {
    throw std::invalid_argument("negative rate allocation");
  }
  if (alloc.r_c2.sum() > report.common_rate_c2 + kRateTol) {
    throw std::invalid_argument("inter-cluster allocation exceeds common rate");
  }
  for (int q = 0; q < clustering.n_clusters(); ++q) {
    double s = 0.0;
    for (int u : clustering.members[q]) s += alloc.r_c1[u];
    if (s > report.common_rate_c1[q] + kRateTol) {
      throw std::invalid_argument("intra-cluster allocation exceeds common rate");
    }
  }
  report.total.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    report.total[k] = alloc.r_c2[k] + alloc.r_c1[k] + report.rate_p[k];
  }
  report.min_rate = report.total.minCoeff();
  return {report.total, report.min_rate};
}

RateReport rate_report(std::span<const Eigen::VectorXcd> channels,
                       const BeamformerSet& beams, const RateAllocation& alloc,
                       const Clustering& clustering, double noise_power) {
  RateReport rep = evaluate_sinrs(channels, beams, clustering, noise_power);
  common_rates(rep, clustering);
  total_user_rates(rep, alloc, clustering);
  return rep;
}

std::string RateReport::to_json() const {
  nlohmann::ordered_json j;
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["gamma_c2"] = vec(gamma_c2);
  j["gamma_c1"] = vec(gamma_c1);
  j["gamma_p"] = vec(gamma_p);
  j["rate_c2"] = vec(rate_c2);
  j["rate_c1"] = vec(rate_c1);
  j["rate_p"] = vec(rate_p);
  j["common_rate_c2"] = common_rate_c2;
  j["common_rate_c1"] = vec(common_rate_c1);
  j["total"] = vec(total);
  j["min_rate"] = min_rate;
  return j.dump(2);
}

std::vector<Violation> check_full_feasibility(const Apv& apv,
                                              const BeamformerSet& beams,
                                              const RateAllocation& alloc,
                                              const Clustering& clustering,
                                              const Scenario& scenario) {
  constexpr double kPosTol = 1e-9;
  constexpr double kPowerRelTol = 1e-6;
  constexpr double kRateTol = 1e-6;
  const GlobalConfig& cfg = scenario.config;
  std::vector<Violation> out;

  for (int m = 0; m < apv.t.size(); ++m) {
    const double below = cfg.t_min - apv.t[m];
    const double above = apv.t[m] - cfg.t_max;
    const double over = std::max(below, above);
    if (over > kPosTol) {
      out.push_back({"bounds", over, "antenna " + std::to_string(m)});
    }
  }
  for (int i = 0; i < apv.t.size(); ++i) {
    for (int j = i + 1; j < apv.t.size(); ++j) {
      const double gap = cfg.d0 - std::abs(apv.t[i] - apv.t[j]);
      if (gap > kPosTol) {
        out.push_back({"spacing", gap,
                       "antennas " + std::to_string(i) + "," + std::to_string(j)});
      }
    }
  }

  try {
    clustering.validate();
    if (clustering.n_users() != cfg.n_users) {
      throw std::invalid_argument("clustering does not cover configured users");
    }
  } catch (const std::exception& e) {
    out.push_back({"partition", 1.0, e.what()});
    return out;  // rate checks are meaningless on a broken partition
  }

  const double power = beams.total_power();
  if (power > cfg.p_max * (1.0 + kPowerRelTol)) {
    out.push_back({"power", power / cfg.p_max - 1.0, ""});
  }

  const std::vector<Eigen::VectorXcd> h = channel_vectors(apv, scenario);
  RateReport rep = evaluate_sinrs(h, beams, clustering, cfg.noise_power);
  common_rates(rep, clustering);

  if (alloc.r_c2.minCoeff() < -kRateTol || alloc.r_c1.minCoeff() < -kRateTol) {
    out.push_back({"rate_negative",
                   -std::min(alloc.r_c2.minCoeff(), alloc.r_c1.minCoeff()), ""});
  }
  const double c2_sum = alloc.r_c2.sum();
  if (c2_sum > rep.common_rate_c2 + kRateTol) {
    out.push_back({"rate_sum_c2", c2_sum - rep.common_rate_c2, ""});
  }
  for (int q = 0; q < clustering.n_clusters(); ++q) {
    double s = 0.0;
    for (int u : clustering.members[q]) s += alloc.r_c1[u];
    if (s > rep.common_rate_c1[q] + kRateTol) {
      out.push_back({"rate_sum_c1", s - rep.common_rate_c1[q],
                     "cluster " + std::to_string(q)});
    }
  }
  return out;
}

}  // namespace marsma
