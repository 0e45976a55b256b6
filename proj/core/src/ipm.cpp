#include "marsma/ipm.hpp"

#ifdef MARSMA_IPM_TRACE
#include <cstdio>
#endif

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace marsma {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Real parameterization of a Hermitian N x N block: N diagonal entries, then
// (re, im) per off-diagonal pair in lexicographic order. Quadratic forms and
// traces are exact linear images of the parameter vector.
struct HermitianBasis {
  int n = 0;
  // slot -> (m, p, kind); kind 0 = diagonal, 1 = real part, 2 = imag part
  std::vector<std::array<int, 3>> slots_table;

  explicit HermitianBasis(int dim = 0) : n(dim) {
    slots_table.reserve(static_cast<std::size_t>(n) * n);
    for (int m = 0; m < n; ++m) slots_table.push_back({m, m, 0});
    for (int m = 0; m < n; ++m) {
      for (int p = m + 1; p < n; ++p) {
        slots_table.push_back({m, p, 1});
        slots_table.push_back({m, p, 2});
      }
    }
  }

  int size() const { return n * n; }

  Eigen::MatrixXcd unpack(const Eigen::VectorXd& x, int offset) const {
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < size(); ++a) {
      const auto [m, p, kind] = slots_table[a];
      const double v = x[offset + a];
      switch (kind) {
        case 0: w(m, m) += v; break;
        case 1:
          w(m, p) += v;
          w(p, m) += v;
          break;
        default:
          w(m, p) += std::complex<double>(0.0, v);
          w(p, m) -= std::complex<double>(0.0, v);
      }
    }
    return w;
  }

  void pack(const Eigen::MatrixXcd& w, Eigen::VectorXd& x, int offset) const {
    for (int a = 0; a < size(); ++a) {
      const auto [m, p, kind] = slots_table[a];
      x[offset + a] = kind == 0   ? w(m, m).real()
                      : kind == 1 ? w(m, p).real()
                                  : w(m, p).imag();
    }
  }

  // Coefficients of h^H W h as a linear function of the block parameters.
  Eigen::VectorXd qform_coeffs(const Eigen::VectorXcd& h) const {
    Eigen::VectorXd q(size());
    for (int a = 0; a < size(); ++a) {
      const auto [m, p, kind] = slots_table[a];
      const std::complex<double> cross = std::conj(h[m]) * h[p];
      q[a] = kind == 0 ? std::norm(h[m])
             : kind == 1 ? 2.0 * cross.real()
                         : -2.0 * cross.imag();
    }
    return q;
  }

  // Gradient of -log det W in block parameters, given S = W^{-1}.
  void logdet_grad(const Eigen::MatrixXcd& s, Eigen::VectorXd& grad,
                   int offset) const {
    for (int a = 0; a < size(); ++a) {
      const auto [m, p, kind] = slots_table[a];
      grad[offset + a] -= kind == 0   ? s(m, m).real()
                          : kind == 1 ? 2.0 * s(m, p).real()
                                      : 2.0 * s(m, p).imag();
    }
  }

  // Hessian of -log det W: H_ab = Re tr(S E_a S E_b), computed from
  // T_a = S E_a S assembled out of column outer products of S.
  void logdet_hess(const Eigen::MatrixXcd& s, Eigen::MatrixXd& h,
                   int offset) const {
    const std::complex<double> j(0.0, 1.0);
    Eigen::MatrixXcd t(n, n);
    for (int a = 0; a < size(); ++a) {
      const auto [m, p, kind] = slots_table[a];
      switch (kind) {
        case 0: t.noalias() = s.col(m) * s.col(m).adjoint(); break;
        case 1:
          t.noalias() = s.col(m) * s.col(p).adjoint();
          t.noalias() += s.col(p) * s.col(m).adjoint();
          break;
        default:
          t.noalias() = j * (s.col(m) * s.col(p).adjoint());
          t.noalias() -= j * (s.col(p) * s.col(m).adjoint());
      }
      for (int b = a; b < size(); ++b) {
        const auto [bm, bp, bkind] = slots_table[b];
        const double v = bkind == 0   ? t(bm, bm).real()
                         : bkind == 1 ? 2.0 * t(bm, bp).real()
                                      : 2.0 * t(bm, bp).imag();
        h(offset + a, offset + b) += v;
        if (a != b) h(offset + b, offset + a) += v;
      }
    }
  }
};

// One barrier row: has_log * log2(p.x + 1) + w.x + c0 >= 0 (channels are
// pre-scaled so the in-log noise constant is exactly 1).
struct BarrierRow {
  bool has_log = false;
  Eigen::VectorXd p;
  Eigen::VectorXd w;
  double c0 = 0.0;
};

struct Layout {
  HermitianBasis basis;
  std::vector<int> slots;        // active matrix slots
  std::vector<int> offsets;      // variable offset per active matrix
  std::vector<int> rate_ids;     // active entries of [r_c2; r_c1]
  std::vector<int> rate_offsets;
  int z_off = -1;
  int s_off = -1;  // phase-I slack, -1 in phase II
  int n_vars = 0;
};

Layout make_layout(const ConvexProgramDescription& d, bool phase1) {
  Layout lay;
  lay.basis = HermitianBasis(d.n_t);
  int off = 0;
  for (int i = 0; i < d.layout().total(); ++i) {
    if (!d.matrix_active[i]) continue;
    lay.slots.push_back(i);
    lay.offsets.push_back(off);
    off += lay.basis.size();
  }
  for (int j = 0; j < 2 * d.n_users; ++j) {
    if (!d.rate_active[j]) continue;
    lay.rate_ids.push_back(j);
    lay.rate_offsets.push_back(off++);
  }
  lay.z_off = off++;
  if (phase1) lay.s_off = off++;
  lay.n_vars = off;
  return lay;
}

std::vector<BarrierRow> make_rows(const ConvexProgramDescription& d,
                                  const Layout& lay) {
  const double sigma2 = d.noise_power;
  const double log2_sigma2 = std::log2(sigma2);
  std::vector<BarrierRow> rows;
  rows.reserve(d.rows.size() + 1 + lay.rate_ids.size());

  // Channel q-form coefficients, normalized so the log constant becomes 1.
  std::vector<Eigen::VectorXd> qn(d.n_users);
  for (int k = 0; k < d.n_users; ++k) {
    qn[k] = lay.basis.qform_coeffs(d.channels[k]) / sigma2;
  }

  for (const ProgramRow& src : d.rows) {
    BarrierRow row;
    row.has_log = src.has_log;
    row.p = Eigen::VectorXd::Zero(lay.n_vars);
    row.w = Eigen::VectorXd::Zero(lay.n_vars);
    for (std::size_t j = 0; j < lay.slots.size(); ++j) {
      const int slot = lay.slots[j];
      const int off = lay.offsets[j];
      const int bs = lay.basis.size();
      if (src.s_log[slot] != 0.0) {
        row.p.segment(off, bs) += src.s_log[slot] * qn[src.user];
      }
      if (src.s_lin[slot] != 0.0) {
        row.w.segment(off, bs) += sigma2 * src.s_lin[slot] * qn[src.user];
      }
    }
    for (std::size_t j = 0; j < lay.rate_ids.size(); ++j) {
      row.w[lay.rate_offsets[j]] += src.a_r[lay.rate_ids[j]];
    }
    row.w[lay.z_off] += src.a_z;
    if (lay.s_off >= 0) row.w[lay.s_off] -= 1.0;
    row.c0 = src.c0 + (row.has_log ? log2_sigma2 : 0.0);
    rows.push_back(std::move(row));
  }

  // trace power budget
  {
    BarrierRow row;
    row.p = Eigen::VectorXd::Zero(lay.n_vars);
    row.w = Eigen::VectorXd::Zero(lay.n_vars);
    for (std::size_t j = 0; j < lay.slots.size(); ++j) {
      for (int m = 0; m < lay.basis.n; ++m) row.w[lay.offsets[j] + m] = -1.0;
    }
    row.c0 = d.p_max;
    rows.push_back(std::move(row));
  }

  // rate nonnegativity
  for (std::size_t j = 0; j < lay.rate_ids.size(); ++j) {
    BarrierRow row;
    row.p = Eigen::VectorXd::Zero(lay.n_vars);
    row.w = Eigen::VectorXd::Zero(lay.n_vars);
    row.w[lay.rate_offsets[j]] = 1.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

double row_value(const BarrierRow& row, const Eigen::VectorXd& x) {
  double v = row.w.dot(x) + row.c0;
  if (row.has_log) v += std::log2(row.p.dot(x) + 1.0);
  return v;
}

// Cached per-point state: matrices, inverses, log-dets, row values.
struct PointEval {
  bool in_domain = false;
  std::vector<Eigen::MatrixXcd> w;  // per active matrix
  std::vector<Eigen::MatrixXcd> s;  // inverses
  double logdet_sum = 0.0;
  Eigen::VectorXd g;  // row values
  double barrier = 0.0;
};

PointEval evaluate_point(const Eigen::VectorXd& x, const Layout& lay,
                         const std::vector<BarrierRow>& rows, bool need_inverse) {
  PointEval ev;
  const int nb = static_cast<int>(lay.slots.size());
  ev.w.resize(nb);
  ev.s.resize(nb);
  for (int j = 0; j < nb; ++j) {
    ev.w[j] = lay.basis.unpack(x, lay.offsets[j]);
    Eigen::LLT<Eigen::MatrixXcd> llt(ev.w[j]);
    if (llt.info() != Eigen::Success) return ev;
    double ld = 0.0;
    for (int m = 0; m < lay.basis.n; ++m) {
      const double dm = llt.matrixL()(m, m).real();
      if (!(dm > 0.0)) return ev;
      ld += std::log(dm);
    }
    ev.logdet_sum += 2.0 * ld;
    if (need_inverse) {
      ev.s[j] = llt.solve(Eigen::MatrixXcd::Identity(lay.basis.n, lay.basis.n));
    }
  }
  ev.g.resize(static_cast<Eigen::Index>(rows.size()));
  double barrier = -ev.logdet_sum;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double v = row_value(rows[r], x);
    if (!(v > 0.0) || !std::isfinite(v)) return ev;
    ev.g[static_cast<Eigen::Index>(r)] = v;
    barrier -= std::log(v);
  }
  ev.barrier = barrier;
  ev.in_domain = true;
  return ev;
}

struct PathResult {
  Eigen::VectorXd x;
  double gap_bound = kInf;
  int newton_steps = 0;
  bool stalled = false;
  Eigen::VectorXd centered;  // empty if never recorded
  double centered_gap = 0.0;
};

// Damped-Newton barrier path following on
//   minimize t * (-c.x) - sum log(rows) - sum logdet(blocks).
// early_exit, when set, stops as soon as x[obj] exceeds the given threshold
// (used by phase I, which only needs a strictly positive slack).
PathResult follow_path(Eigen::VectorXd x, const Layout& lay,
                       const std::vector<BarrierRow>& rows, int obj_index,
                       const Eigen::VectorXd& objective,
                       const SolverOptions& opts, double t_start, double nu,
                       const double* early_exit) {
  PathResult out;
  double t = t_start;
  int consecutive_failures = 0;

  Eigen::VectorXd grad(lay.n_vars);
  Eigen::MatrixXd hess(lay.n_vars, lay.n_vars);
  // two low-rank columns per log row, one per linear row
  Eigen::MatrixXd lowrank(lay.n_vars, 2 * rows.size());

  for (int stage = 0; stage < opts.max_stages; ++stage) {
    const bool final_stage = nu / t <= opts.gap_target;
    // loose centering mid-path, tight on the last stage
    const double stage_tol = (final_stage ? opts.newton_tol : 1e-4) * (1.0 + nu);
#ifdef MARSMA_IPM_TRACE
    const int steps_before = out.newton_steps;
    double last_dec = -1.0;
#endif

    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      PointEval ev = evaluate_point(x, lay, rows, true);
      if (!ev.in_domain) {
        // should not happen: x is maintained inside the domain
        out.stalled = true;
        out.x = x;
        return out;
      }
      if (early_exit && x[obj_index] > *early_exit) {
        out.x = x;
        out.gap_bound = nu / t;
        return out;
      }

      grad = -t * objective;
      int cols = 0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const BarrierRow& row = rows[r];
        const double g = ev.g[static_cast<Eigen::Index>(r)];
        if (row.has_log) {
          const double u1 = row.p.dot(x) + 1.0;
          Eigen::Ref<Eigen::VectorXd> dg = lowrank.col(cols++);
          dg = (row.w + row.p / (u1 * kLn2)) / g;
          grad.noalias() -= dg;
          lowrank.col(cols++) = row.p / (u1 * std::sqrt(g * kLn2));
        } else {
          Eigen::Ref<Eigen::VectorXd> dg = lowrank.col(cols++);
          dg = row.w / g;
          grad.noalias() -= dg;
        }
      }
      hess.setZero();
      hess.selfadjointView<Eigen::Lower>().rankUpdate(lowrank.leftCols(cols));
      for (std::size_t j = 0; j < lay.slots.size(); ++j) {
        lay.basis.logdet_grad(ev.s[j], grad, lay.offsets[j]);
        lay.basis.logdet_hess(ev.s[j], hess, lay.offsets[j]);
      }
      // Newton direction on the Jacobi-scaled system: column scales span many
      // orders of magnitude near the boundary and unscaled factorizations
      // fall apart. Lower triangle only.
      Eigen::VectorXd scale(lay.n_vars);
      for (int i = 0; i < lay.n_vars; ++i) {
        scale[i] = 1.0 / std::sqrt(std::max(hess(i, i), 1e-300));
      }
      Eigen::VectorXd step;
      const Eigen::VectorXd rhs = -(grad.array() * scale.array()).matrix();
      double ridge = 0.0;
      for (int attempt = 0; attempt < 10; ++attempt) {
        Eigen::MatrixXd h(lay.n_vars, lay.n_vars);
        for (int c = 0; c < lay.n_vars; ++c) {
          for (int r = c; r < lay.n_vars; ++r) {
            h(r, c) = hess(r, c) * scale[r] * scale[c];
          }
          h(c, c) += ridge;
        }
        Eigen::VectorXd y;
        Eigen::LLT<Eigen::MatrixXd> llt(h);
        if (llt.info() == Eigen::Success) {
          y = llt.solve(rhs);
        } else {
          Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
          if (ldlt.info() == Eigen::Success) y = ldlt.solve(rhs);
        }
        if (y.size() == lay.n_vars) {
          step = (y.array() * scale.array()).matrix();
          if (step.allFinite() && grad.dot(step) < 0.0) break;
        }
        step.resize(0);
        ridge = ridge == 0.0 ? 1e-14 : ridge * 100.0;
      }
      if (step.size() == 0) {
        out.stalled = true;
        out.x = x;
        out.gap_bound = nu / t;
        return out;
      }

      const double decrement2 = -grad.dot(step);
      ++out.newton_steps;

      // backtrack into the domain, then Armijo on the merit
      const double merit0 = -t * objective.dot(x) + ev.barrier;
      double alpha = 1.0;
      bool moved = false;
      double accepted_merit = 0.0;
      for (int ls = 0; ls < 70; ++ls) {
        Eigen::VectorXd trial = x + alpha * step;
        PointEval tev = evaluate_point(trial, lay, rows, false);
        if (tev.in_domain) {
          const double merit = -t * objective.dot(trial) + tev.barrier;
          if (merit <= merit0 + 0.25 * alpha * grad.dot(step)) {
            x = std::move(trial);
            accepted_merit = merit;
            moved = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (moved && alpha == 1.0 && decrement2 * 0.5 > stage_tol) {
        // long valley marches accept unit steps without entering the
        // quadratic zone; extrapolate along the same direction while the
        // merit keeps dropping
        double best_merit = accepted_merit;
        for (double ext = 2.0; ext <= 1024.0; ext *= 2.0) {
          Eigen::VectorXd trial = x + (ext - 1.0) * step;
          PointEval tev = evaluate_point(trial, lay, rows, false);
          if (!tev.in_domain) break;
          const double merit = -t * objective.dot(trial) + tev.barrier;
          if (merit >= best_merit - 1e-12 * std::abs(best_merit)) break;
          x = std::move(trial);
          best_merit = merit;
        }
      }
      if (!moved) {
        if (++consecutive_failures >= 2) {
          out.stalled = true;
          out.x = x;
          out.gap_bound = nu / t;
          return out;
        }
        break;  // give the next stage a chance
      }
      consecutive_failures = 0;
#ifdef MARSMA_IPM_TRACE
      last_dec = decrement2;
      std::fprintf(stderr, "    [nt] it=%d dec=%.3e alpha=%.3e |step|=%.3e\n", it,
                   decrement2, alpha, step.norm());
#endif
      if (decrement2 * 0.5 < stage_tol) break;
    }

#ifdef MARSMA_IPM_TRACE
    std::fprintf(stderr, "  [ipm] stage %d t=%.2e steps=%d last_dec=%.2e\n",
                 stage, t, out.newton_steps - steps_before, last_dec);
#endif
    out.gap_bound = nu / t;
    // warm-start / re-expansion point: one stage lands in this window since
    // it is exactly mu wide
    if (out.gap_bound >= 1e-4 && out.gap_bound <= 3e-3) {
      out.centered = x;
      out.centered_gap = out.gap_bound;
    }
    if (out.gap_bound <= opts.gap_target) break;
    // never overshoot the target stage; the last one is the worst conditioned
    t = std::min(t * opts.mu, 1.05 * nu / opts.gap_target);
  }
  out.x = x;
  return out;
}

LiftedSolution unpack_solution(const Eigen::VectorXd& x,
                               const ConvexProgramDescription& d,
                               const Layout& lay) {
  LiftedSolution sol;
  const int m_total = d.layout().total();
  sol.w_mat.assign(m_total, Eigen::MatrixXcd::Zero(d.n_t, d.n_t));
  for (std::size_t j = 0; j < lay.slots.size(); ++j) {
    sol.w_mat[lay.slots[j]] = lay.basis.unpack(x, lay.offsets[j]);
  }
  sol.alloc = RateAllocation::zeros(d.n_users);
  for (std::size_t j = 0; j < lay.rate_ids.size(); ++j) {
    const int id = lay.rate_ids[j];
    const double v = std::max(0.0, x[lay.rate_offsets[j]]);
    if (id < d.n_users) {
      sol.alloc.r_c2[id] = v;
    } else {
      sol.alloc.r_c1[id - d.n_users] = v;
    }
  }
  sol.z = x[lay.z_off];
  return sol;
}

// Largest z admitted by the rows at a fixed (matrix, rate) assignment.
double max_z_at(const Eigen::VectorXd& x_no_z, const Layout& lay,
                const std::vector<BarrierRow>& rows) {
  double z = kInf;
  for (const BarrierRow& row : rows) {
    const double az = row.w[lay.z_off];
    if (az >= 0.0) continue;
    Eigen::VectorXd probe = x_no_z;
    probe[lay.z_off] = 0.0;
    z = std::min(z, row_value(row, probe) / (-az));
  }
  return z;
}

// Strictly interior default start: small identity matrices, small rates.
Eigen::VectorXd default_start(const ConvexProgramDescription& d, const Layout& lay) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(lay.n_vars);
  const int nb = static_cast<int>(lay.slots.size());
  if (nb > 0) {
    const double ridge = 0.3 * d.p_max / (nb * d.n_t);
    for (int j = 0; j < nb; ++j) {
      for (int m = 0; m < d.n_t; ++m) x[lay.offsets[j] + m] = ridge;
    }
  }
  for (std::size_t j = 0; j < lay.rate_ids.size(); ++j) {
    x[lay.rate_offsets[j]] = 1e-6;
  }
  return x;
}

// Clamp a warm-start candidate into the strict interior, touching it as
// little as possible: an already-interior point (a centered iterate from a
// previous solve) must pass through unchanged or the path restart pays for
// the distortion.
bool regularize_candidate(const ConvexProgramDescription& d, const Layout& lay,
                          const std::vector<BarrierRow>& rows,
                          const LiftedSolution& warm, double warm_gap,
                          Eigen::VectorXd& x) {
  x = Eigen::VectorXd::Zero(lay.n_vars);
  const double trace_scale = std::max(d.p_max, 1e-30);
  const double eig_floor = 1e-6 * trace_scale / std::max(1, d.n_t);
  const double eig_ok = 1e-13 * trace_scale / std::max(1, d.n_t);
  double trace = 0.0;
  for (std::size_t j = 0; j < lay.slots.size(); ++j) {
    Eigen::MatrixXcd w = warm.w_mat[lay.slots[j]];
    w = 0.5 * (w + w.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
    if (es.eigenvalues().minCoeff() < eig_ok) {
      const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(eig_floor);
      w = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    }
    lay.basis.pack(w, x, lay.offsets[j]);
    trace += w.real().trace();
  }
  if (trace >= d.p_max * (1.0 - 1e-12)) {
    const double scale = (1.0 - 1e-9) * d.p_max / trace;
    for (std::size_t j = 0; j < lay.slots.size(); ++j) {
      x.segment(lay.offsets[j], lay.basis.size()) *= scale;
    }
  }
  for (std::size_t j = 0; j < lay.rate_ids.size(); ++j) {
    const int id = lay.rate_ids[j];
    const double r = id < d.n_users ? warm.alloc.r_c2[id]
                                    : warm.alloc.r_c1[id - d.n_users];
    x[lay.rate_offsets[j]] = std::max(r, 1e-12);
  }
  const double z_room = max_z_at(x, lay, rows);
  if (!std::isfinite(z_room)) {
    x[lay.z_off] = warm.z;
  } else {
    // when z must be pulled below the warm value, leave a slack comparable
    // to the gap the warm point was centered at, or the row starts on the
    // boundary and the restart pays dearly
    const double margin = std::max(1e-9, 0.2 * warm_gap);
    x[lay.z_off] = std::min(warm.z, z_room - margin);
  }
  const PointEval ev = evaluate_point(x, lay, rows, false);
  if (!ev.in_domain) return false;
  return ev.g.minCoeff() > 1e-12;
}

}  // namespace

ConvexSolveResult solve_convex(const ConvexProgramDescription& desc,
                               const SolverOptions& opts,
                               const LiftedSolution* warm) {
  desc.validate();
  ConvexSolveResult res;

  const Layout lay = make_layout(desc, /*phase1=*/false);
  const std::vector<BarrierRow> rows = make_rows(desc, lay);

  // Degenerate budget: the zero point is the only candidate.
  if (desc.p_max <= 1e-15) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lay.n_vars);
    double worst = kInf;
    for (const BarrierRow& row : rows) {
      if (row.w[lay.z_off] == 0.0) worst = std::min(worst, row_value(row, x));
    }
    const double z = max_z_at(x, lay, rows);
    x[lay.z_off] = std::isfinite(z) ? z : 0.0;
    res.solution = unpack_solution(x, desc, lay);
    res.ok = worst >= -1e-9;
    res.status = res.ok ? "optimal" : "infeasible";
    res.gap_bound = 0.0;
    return res;
  }

  double nu = static_cast<double>(rows.size()) +
              static_cast<double>(lay.slots.size()) * desc.n_t;

  Eigen::VectorXd x0;
  bool have_start = false;
  double t_start = opts.t_init;
  if (warm != nullptr &&
      regularize_candidate(desc, lay, rows, *warm,
                           opts.warm_gap > 0.0 ? opts.warm_gap : 1e-3, x0)) {
    have_start = true;
    if (opts.warm_gap > 0.0) {
      t_start = std::clamp(nu / opts.warm_gap, opts.t_init,
                           0.5 * nu / opts.gap_target);
    } else {
      t_start = std::max(opts.t_init, opts.t_warm);
    }
  }
  if (!have_start) {
    Eigen::VectorXd cand = default_start(desc, lay);
    const double z_room = max_z_at(cand, lay, rows);
    cand[lay.z_off] = std::isfinite(z_room) ? z_room - 1.0 : 0.0;
    PointEval ev = evaluate_point(cand, lay, rows, false);
    if (ev.in_domain && ev.g.minCoeff() > 1e-9) {
      x0 = std::move(cand);
      have_start = true;
    }
  }

  if (!have_start) {
    // Phase I: maximize the feasibility slack until it turns positive.
    const Layout lay1 = make_layout(desc, /*phase1=*/true);
    std::vector<BarrierRow> rows1 = make_rows(desc, lay1);
    Eigen::VectorXd x1 = Eigen::VectorXd::Zero(lay1.n_vars);
    x1.head(lay.n_vars - 1) = default_start(desc, lay).head(lay.n_vars - 1);
    // private rows need z well below their cap before s is even considered
    x1[lay1.z_off] = -10.0;
    {
      // z only relaxes rows here, so it needs an explicit floor to keep the
      // phase-I barrier bounded
      BarrierRow z_floor;
      z_floor.p = Eigen::VectorXd::Zero(lay1.n_vars);
      z_floor.w = Eigen::VectorXd::Zero(lay1.n_vars);
      z_floor.w[lay1.z_off] = 1.0;
      z_floor.c0 = -(x1[lay1.z_off] - 10.0);
      rows1.push_back(std::move(z_floor));
    }
    double worst = kInf;
    {
      Eigen::VectorXd probe = x1;
      probe[lay1.s_off] = 0.0;
      for (std::size_t r = 0; r < desc.rows.size(); ++r) {
        worst = std::min(worst, row_value(rows1[r], probe));
      }
    }
    x1[lay1.s_off] = worst - 1.0;
    const double nu1 = static_cast<double>(rows1.size()) +
                       static_cast<double>(lay1.slots.size()) * desc.n_t;
    const double s_exit = 1e-6;
    SolverOptions o1 = opts;
    o1.gap_target = 1e-8;
    Eigen::VectorXd slack_objective = Eigen::VectorXd::Zero(lay1.n_vars);
    slack_objective[lay1.s_off] = 1.0;
    PathResult p1 = follow_path(x1, lay1, rows1, lay1.s_off, slack_objective,
                                o1, opts.t_init, nu1, &s_exit);
    res.newton_steps += p1.newton_steps;
    if (p1.x.size() == 0 || p1.x[lay1.s_off] <= 0.0) {
      res.ok = false;
      res.status = "infeasible";
      res.solution = unpack_solution(Eigen::VectorXd::Zero(lay.n_vars), desc, lay);
      return res;
    }
    x0 = p1.x.head(lay.n_vars);
    have_start = true;
  }

  Eigen::VectorXd objective = Eigen::VectorXd::Zero(lay.n_vars);
  objective[lay.z_off] = 1.0;
  PathResult path = follow_path(x0, lay, rows, lay.z_off, objective, opts,
                                t_start, nu, nullptr);
  res.newton_steps += path.newton_steps;
  res.solution = unpack_solution(path.x, desc, lay);
  res.gap_bound = path.gap_bound;
  res.ok = path.gap_bound <= opts.accuracy;
  res.status = path.stalled ? "stalled"
                            : (path.gap_bound <= opts.gap_target ? "optimal"
                                                                 : "suboptimal");
  if (path.centered.size() == lay.n_vars) {
    res.centered = unpack_solution(path.centered, desc, lay);
    res.centered_gap = path.centered_gap;
  }
  return res;
}

}  // namespace marsma
