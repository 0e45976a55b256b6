#include "marsma/inner_solver.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "marsma/clustering.hpp"
#include "marsma/schemes.hpp"

namespace marsma {

BeamformerSet mrt_initialization(std::span<const Eigen::VectorXcd> channels,
                                 double p_max) {
  const int k_users = static_cast<int>(channels.size());
  if (k_users == 0) throw std::invalid_argument("no channels");
  const int n_t = static_cast<int>(channels[0].size());
  for (const auto& h : channels) {
    if (h.norm() == 0.0) throw std::invalid_argument("zero channel in MRT init");
  }
  BeamformerSet b = BeamformerSet::zeros(n_t, 0, k_users);
  const double amp = std::sqrt(p_max / k_users);
  for (int k = 0; k < k_users; ++k) {
    b.w_p[k] = amp * channels[k] / channels[k].norm();
  }
  return b;
}

std::vector<Eigen::MatrixXcd> lift_beamformers(const BeamformerSet& beams,
                                               const StreamLayout& layout) {
  const int n_t = static_cast<int>(beams.w_p.empty() ? beams.w_c2.size()
                                                     : beams.w_p[0].size());
  std::vector<Eigen::MatrixXcd> w(layout.total(),
                                  Eigen::MatrixXcd::Zero(n_t, n_t));
  auto lift = [](const Eigen::VectorXcd& v) -> Eigen::MatrixXcd {
    return v * v.adjoint();
  };
  if (beams.w_c2.size() > 0) w[layout.inter()] = lift(beams.w_c2);
  for (int q = 0; q < static_cast<int>(beams.w_c1.size()); ++q) {
    w[layout.intra(q)] = lift(beams.w_c1[q]);
  }
  for (int k = 0; k < static_cast<int>(beams.w_p.size()); ++k) {
    w[layout.priv(k)] = lift(beams.w_p[k]);
  }
  return w;
}

ScaResult sca_solve(std::span<const Eigen::VectorXcd> channels,
                    const Clustering& clustering, double noise_power,
                    double p_max, const InnerOptions& opts) {
  const int k_users = static_cast<int>(channels.size());
  const StreamLayout layout{clustering.n_clusters(), k_users};

  ScaResult out;

  // iterate 0: exact MRT outer products, so the tangent bounds are tight there
  BeamformerSet init = mrt_initialization(channels, p_max);
  init.w_c1.assign(clustering.n_clusters(),
                   Eigen::VectorXcd::Zero(channels[0].size()));
  LiftedSolution current;
  current.w_mat = lift_beamformers(init, layout);
  current.alloc = RateAllocation::zeros(k_users);
  {
    // slack admitted by the init point: its worst private rate
    RateReport rep = evaluate_sinrs(channels, init, clustering, noise_power);
    current.z = rep.rate_p.minCoeff();
  }
  out.z_trajectory.push_back(current.z);

  // Each subproblem is expanded at the previous solve's centered interior
  // iterate and warm-started from that same point: tangency there keeps the
  // start strictly feasible, so phase I never reruns mid-sequence.
  // Intermediate solves run to the loose mid_gap at a barrier weight scaled
  // to the last slack improvement (high-t warm starts are wasted while the
  // tangents still move); the final subproblem is then re-solved tightly.
  LiftedSolution expand_at = current;

  SolverOptions mid_opts = opts.solver;
  mid_opts.gap_target = std::max(opts.solver.gap_target, opts.mid_gap);
  mid_opts.accuracy = std::max(opts.solver.accuracy, 4.0 * mid_opts.gap_target);

  ConvexProgramDescription last_desc;
  LiftedSolution last_warm;
  double last_warm_gap = 0.0;
  bool have_last = false;

  for (int j = 0; j < opts.sca_max_iters; ++j) {
    const ExpansionPoint exp_pt =
        expansion_point(channels, expand_at.w_mat, clustering, layout);
    ConvexProgramDescription desc = build_subproblem(
        channels, clustering, exp_pt, noise_power, p_max, opts.mode);
    const ConvexSolveResult solved = solve_convex(desc, mid_opts, &expand_at);
    if (!solved.ok) {
      out.solver_fallback = true;
      break;  // keep the previous iterate, treat as converged
    }
    ++out.iterations;
    const double z_prev = current.z;
    current = solved.solution;
    out.z_trajectory.push_back(current.z);
    if (solved.centered.has_value()) {
      expand_at = *solved.centered;
      mid_opts.warm_gap = solved.centered_gap;
    } else {
      expand_at = current;
      mid_opts.warm_gap = 0.0;
    }
    last_desc = std::move(desc);
    last_warm = expand_at;
    last_warm_gap = mid_opts.warm_gap;
    have_last = true;
    const double improvement = current.z - z_prev;
    // expected tangent movement next round; a high-t restart cannot pay off
    // while the expansion still moves by more than the warm point's gap
    mid_opts.warm_gap = std::max(mid_opts.warm_gap, 0.5 * improvement);
    if (improvement < opts.sca_eps) break;
  }

  if (have_last) {
    SolverOptions tight = opts.solver;
    tight.warm_gap = last_warm_gap;
    const ConvexSolveResult polished = solve_convex(last_desc, tight, &last_warm);
    if (polished.ok && polished.solution.z >= current.z - opts.solver.accuracy) {
      current = polished.solution;
      if (!out.z_trajectory.empty()) {
        out.z_trajectory.back() = std::max(out.z_trajectory.back(), current.z);
      }
    }
  }

  out.final_solution = std::move(current);
  return out;
}

std::pair<Eigen::VectorXcd, double> rank_one_recovery(const Eigen::MatrixXcd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const int n = static_cast<int>(ev.size());
  const double top = ev[n - 1];
  if (top <= 0.0) {
    return {Eigen::VectorXcd::Zero(n), 0.0};
  }
  const double second = n >= 2 ? std::max(0.0, ev[n - 2]) : 0.0;
  Eigen::VectorXcd v = std::sqrt(top) * es.eigenvectors().col(n - 1);
  return {std::move(v), second / top};
}

ReconcileResult reconcile_allocation(std::span<const Eigen::VectorXcd> channels,
                                     const BeamformerSet& beams,
                                     const RateAllocation& relaxed,
                                     const Clustering& clustering,
                                     double noise_power) {
  ReconcileResult out;
  out.report = evaluate_sinrs(channels, beams, clustering, noise_power);
  common_rates(out.report, clustering);

  out.alloc.r_c2 = relaxed.r_c2.cwiseMax(0.0);
  out.alloc.r_c1 = relaxed.r_c1.cwiseMax(0.0);

  const double c2_sum = out.alloc.r_c2.sum();
  if (c2_sum > out.report.common_rate_c2 && c2_sum > 0.0) {
    out.alloc.r_c2 *= out.report.common_rate_c2 / c2_sum;
  }
  for (int q = 0; q < clustering.n_clusters(); ++q) {
    double s = 0.0;
    for (int u : clustering.members[q]) s += out.alloc.r_c1[u];
    if (s > out.report.common_rate_c1[q] && s > 0.0) {
      const double scale = out.report.common_rate_c1[q] / s;
      for (int u : clustering.members[q]) out.alloc.r_c1[u] *= scale;
    }
  }
  total_user_rates(out.report, out.alloc, clustering);
  out.min_rate = out.report.min_rate;
  return out;
}

InnerResult solve_inner(const Apv& apv, const Scenario& scenario,
                        const InnerOptions& opts) {
  const GlobalConfig& cfg = scenario.config;
  if (apv.t.size() != cfg.n_antennas) {
    throw std::invalid_argument("APV length does not match n_antennas");
  }
  const std::vector<Eigen::VectorXcd> h = channel_vectors(apv, scenario);
  const int k_users = static_cast<int>(h.size());
  const int q_target = (k_users + 1) / 2;

  Clustering clustering;
  switch (opts.clustering) {
    case ClusteringKind::greedy:
      clustering = greedy_pair_clustering(h);
      break;
    case ClusteringKind::kmeans: {
      Rng rng(opts.cluster_seed);
      clustering = kmeans_clustering(h, q_target, rng);
      break;
    }
    case ClusteringKind::random: {
      Rng rng(opts.cluster_seed);
      clustering = random_clustering(k_users, rng);
      break;
    }
  }

  const StreamLayout layout{clustering.n_clusters(), k_users};
  ScaResult sca = sca_solve(h, clustering, cfg.noise_power, cfg.p_max, opts);

  InnerResult res;
  res.clustering = clustering;
  res.relaxation_z = sca.final_solution.z;
  res.sca_iterations = sca.iterations;
  res.solver_fallback = sca.solver_fallback;
  res.z_trajectory = std::move(sca.z_trajectory);

  const bool has_inter = opts.mode != LayerMode::sdma;
  const bool has_intra = opts.mode == LayerMode::two_layer;

  // truncation + reconciliation for one lifted solution
  struct Recovered {
    BeamformerSet beams;
    std::vector<double> ratios;
    RateAllocation alloc;
    double min_rate = 0.0;
  };
  auto recover_solution = [&](const LiftedSolution& sol) {
    Recovered rc;
    rc.beams =
        BeamformerSet::zeros(cfg.n_antennas, clustering.n_clusters(), k_users);
    auto recover = [&rc](const Eigen::MatrixXcd& w) {
      auto [v, ratio] = rank_one_recovery(w);
      rc.ratios.push_back(ratio);
      return v;
    };
    if (has_inter) {
      rc.beams.w_c2 = recover(sol.w_mat[layout.inter()]);
    }
    if (has_intra) {
      for (int q = 0; q < clustering.n_clusters(); ++q) {
        rc.beams.w_c1[q] = recover(sol.w_mat[layout.intra(q)]);
      }
    }
    for (int k = 0; k < k_users; ++k) {
      rc.beams.w_p[k] = recover(sol.w_mat[layout.priv(k)]);
    }
    ReconcileResult rec =
        reconcile_allocation(h, rc.beams, sol.alloc, clustering, cfg.noise_power);
    rc.alloc = std::move(rec.alloc);
    rc.min_rate = rec.min_rate;
    return rc;
  };

  Recovered best = recover_solution(sca.final_solution);

  // When the returned matrices are visibly higher rank (the lifted common
  // stream is a multicast beam, whose relaxation is not always tight),
  // principal-eigenvector truncation can lose real rate. Deterministic
  // Gaussian randomization over the degenerate slots recovers much of it:
  // candidates are drawn from CN(0, W_i), rescaled to the slot's power, and
  // scored through the same reconciliation.
  const double loss_tol = 0.04;
  const double clean_ratio = 1e-3;
  if (res.relaxation_z - best.min_rate > loss_tol) {
    std::vector<int> degenerate;
    std::vector<Eigen::MatrixXcd> roots(layout.total());
    std::vector<double> powers(layout.total(), 0.0);
    {
      int at = 0;
      auto scan = [&](int slot) {
        if (best.ratios[at++] > clean_ratio) {
          const Eigen::MatrixXcd& w = sca.final_solution.w_mat[slot];
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
          roots[slot] = es.eigenvectors() *
                        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
          powers[slot] = std::max(0.0, w.real().trace());
          degenerate.push_back(slot);
        }
      };
      if (has_inter) scan(layout.inter());
      if (has_intra) {
        for (int q = 0; q < clustering.n_clusters(); ++q) scan(layout.intra(q));
      }
      for (int k = 0; k < k_users; ++k) scan(layout.priv(k));
    }
    Rng draw_rng(0x52414e44);  // fixed stream, pure in the inputs
    for (int draw = 0; draw < 80 && !degenerate.empty(); ++draw) {
      BeamformerSet cand = best.beams;
      for (int slot : degenerate) {
        Eigen::VectorXcd g(cfg.n_antennas);
        for (int m = 0; m < cfg.n_antennas; ++m) g[m] = draw_rng.cgauss(1.0);
        Eigen::VectorXcd w = roots[slot] * g;
        const double norm = w.norm();
        if (norm > 0.0 && powers[slot] > 0.0) {
          w *= std::sqrt(powers[slot]) / norm;
        } else {
          w.setZero();
        }
        if (slot == layout.inter()) {
          cand.w_c2 = std::move(w);
        } else if (slot <= layout.intra(clustering.n_clusters() - 1)) {
          cand.w_c1[slot - 1] = std::move(w);
        } else {
          cand.w_p[slot - 1 - clustering.n_clusters()] = std::move(w);
        }
      }
      ReconcileResult rec = reconcile_allocation(h, cand, sca.final_solution.alloc,
                                                 clustering, cfg.noise_power);
      if (rec.min_rate > best.min_rate) {
        best.beams = std::move(cand);
        best.alloc = std::move(rec.alloc);
        best.min_rate = rec.min_rate;
      }
    }
  }

  res.beams = std::move(best.beams);
  res.rank_ratios = std::move(best.ratios);
  res.alloc = std::move(best.alloc);
  res.min_rate = best.min_rate;
  return res;
}

}  // namespace marsma
