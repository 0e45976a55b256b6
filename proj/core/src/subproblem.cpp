#include "marsma/subproblem.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace marsma {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double quad_form(const Eigen::VectorXcd& h, const Eigen::MatrixXcd& w) {
  return std::real(h.dot(w * h));  // h^H W h, real for Hermitian W
}

}  // namespace

const char* layer_mode_name(LayerMode mode) {
  switch (mode) {
    case LayerMode::two_layer: return "two_layer";
    case LayerMode::one_layer: return "one_layer";
    case LayerMode::sdma: return "sdma";
  }
  return "?";
}

LinearForms linear_forms(const Eigen::VectorXcd& h,
                         std::span<const Eigen::MatrixXcd> w_mat, int user_k,
                         int cluster_of_k, const StreamLayout& layout) {
  if (static_cast<int>(w_mat.size()) != layout.total()) {
    throw std::invalid_argument("lifted matrix count does not match layout");
  }
  LinearForms f;
  const int inter = layout.inter();
  const int own_intra = layout.intra(cluster_of_k);
  const int own_priv = layout.priv(user_k);
  for (int i = 0; i < layout.total(); ++i) {
    const double v = quad_form(h, w_mat[i]);
    f.lambda_c2 += v;
    if (i != inter) f.lambda_c1 += v;
    if (i != inter && i != own_intra) f.lambda_p += v;
    if (i != inter && i != own_intra && i != own_priv) f.phi_p += v;
  }
  return f;
}

ExpansionPoint expansion_point(std::span<const Eigen::VectorXcd> channels,
                               std::span<const Eigen::MatrixXcd> w_mat,
                               const Clustering& clustering,
                               const StreamLayout& layout) {
  const int k_users = static_cast<int>(channels.size());
  ExpansionPoint e;
  e.lambda_c1.resize(k_users);
  e.lambda_p.resize(k_users);
  e.phi_p.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const LinearForms f =
        linear_forms(channels[k], w_mat, k, clustering.cluster_of[k], layout);
    e.lambda_c1[k] = std::max(0.0, f.lambda_c1);
    e.lambda_p[k] = std::max(0.0, f.lambda_p);
    e.phi_p[k] = std::max(0.0, f.phi_p);
  }
  return e;
}

double taylor_lower_bound(double lambda, double lambda_j, double noise_power) {
  if (lambda_j < 0.0) throw std::invalid_argument("expansion value must be >= 0");
  const double denom = lambda_j + noise_power;
  return -std::log2(denom) - (lambda - lambda_j) / (denom * kLn2);
}

void ConvexProgramDescription::validate() const {
  const StreamLayout lay = layout();
  if (static_cast<int>(channels.size()) != n_users ||
      static_cast<int>(cluster_of.size()) != n_users ||
      static_cast<int>(matrix_active.size()) != lay.total() ||
      static_cast<int>(rate_active.size()) != 2 * n_users) {
    throw std::invalid_argument("inconsistent program dimensions");
  }
  for (const auto& h : channels) {
    if (h.size() != n_t) throw std::invalid_argument("channel length != n_t");
  }
  for (const ProgramRow& row : rows) {
    if (static_cast<int>(row.s_log.size()) != lay.total() ||
        static_cast<int>(row.s_lin.size()) != lay.total() ||
        row.a_r.size() != 2 * n_users || row.user < 0 || row.user >= n_users) {
      throw std::invalid_argument("inconsistent program row");
    }
  }
  if (noise_power <= 0.0 || p_max < 0.0) {
    throw std::invalid_argument("bad noise power or power budget");
  }
}

ConvexProgramDescription build_subproblem(std::span<const Eigen::VectorXcd> channels,
                                          const Clustering& clustering,
                                          const ExpansionPoint& expansion,
                                          double noise_power, double p_max,
                                          LayerMode mode) {
  const int k_users = static_cast<int>(channels.size());
  if (clustering.n_users() != k_users) {
    throw std::invalid_argument("clustering size does not match channels");
  }
  if (expansion.lambda_c1.size() != k_users || expansion.lambda_p.size() != k_users ||
      expansion.phi_p.size() != k_users) {
    throw std::invalid_argument("expansion point size mismatch");
  }
  for (int k = 0; k < k_users; ++k) {
    for (double v : {expansion.lambda_c1[k], expansion.lambda_p[k], expansion.phi_p[k]}) {
      if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument("expansion values must be finite and nonnegative");
      }
    }
  }

  ConvexProgramDescription d;
  d.n_t = static_cast<int>(channels.empty() ? 0 : channels[0].size());
  d.n_users = k_users;
  d.n_clusters = clustering.n_clusters();
  d.noise_power = noise_power;
  d.p_max = p_max;
  d.mode = mode;
  d.cluster_of = clustering.cluster_of;
  d.channels.assign(channels.begin(), channels.end());

  const StreamLayout lay = d.layout();
  const int m_total = lay.total();

  const bool has_inter = mode != LayerMode::sdma;
  const bool has_intra = mode == LayerMode::two_layer;

  d.matrix_active.assign(m_total, 1);
  d.matrix_active[lay.inter()] = has_inter ? 1 : 0;
  for (int q = 0; q < d.n_clusters; ++q) {
    d.matrix_active[lay.intra(q)] = has_intra ? 1 : 0;
  }
  d.rate_active.assign(2 * k_users, 0);
  for (int k = 0; k < k_users; ++k) {
    d.rate_active[k] = has_inter ? 1 : 0;
    d.rate_active[k_users + k] = has_intra ? 1 : 0;
  }

  // Taylor coefficients are split into a constant and a slope on the
  // corresponding quadratic form: -log2(x + n) around x_j contributes
  // c0 = -log2(x_j + n) + x_j / ((x_j + n) ln 2) and slope -1/((x_j + n) ln 2).
  auto taylor_const = [noise_power](double xj) {
    return -std::log2(xj + noise_power) + xj / ((xj + noise_power) * kLn2);
  };
  auto taylor_slope = [noise_power](double xj) {
    return -1.0 / ((xj + noise_power) * kLn2);
  };

  for (int k = 0; k < k_users; ++k) {
    const int q = clustering.cluster_of[k];

    if (has_inter) {
      ProgramRow row;
      row.name = "inter_common[" + std::to_string(k) + "]";
      row.user = k;
      row.s_log.assign(m_total, 0.0);
      row.s_lin.assign(m_total, 0.0);
      row.a_r = Eigen::VectorXd::Zero(2 * k_users);
      for (int i = 0; i < m_total; ++i) {
        if (!d.matrix_active[i]) continue;
        row.s_log[i] = 1.0;
        if (i != lay.inter()) row.s_lin[i] = taylor_slope(expansion.lambda_c1[k]);
      }
      row.c0 = taylor_const(expansion.lambda_c1[k]);
      for (int j = 0; j < k_users; ++j) row.a_r[j] = -1.0;
      d.rows.push_back(std::move(row));
    }

    if (has_intra) {
      ProgramRow row;
      row.name = "intra_common[" + std::to_string(k) + "]";
      row.user = k;
      row.s_log.assign(m_total, 0.0);
      row.s_lin.assign(m_total, 0.0);
      row.a_r = Eigen::VectorXd::Zero(2 * k_users);
      for (int i = 0; i < m_total; ++i) {
        if (!d.matrix_active[i] || i == lay.inter()) continue;
        row.s_log[i] = 1.0;
        if (i != lay.intra(q)) row.s_lin[i] = taylor_slope(expansion.lambda_p[k]);
      }
      row.c0 = taylor_const(expansion.lambda_p[k]);
      for (int u : clustering.members[q]) row.a_r[k_users + u] = -1.0;
      d.rows.push_back(std::move(row));
    }

    {
      ProgramRow row;
      row.name = "private_min[" + std::to_string(k) + "]";
      row.user = k;
      row.s_log.assign(m_total, 0.0);
      row.s_lin.assign(m_total, 0.0);
      row.a_r = Eigen::VectorXd::Zero(2 * k_users);
      for (int i = 0; i < m_total; ++i) {
        if (!d.matrix_active[i] || i == lay.inter() || i == lay.intra(q)) continue;
        row.s_log[i] = 1.0;
        if (i != lay.priv(k)) row.s_lin[i] = taylor_slope(expansion.phi_p[k]);
      }
      row.c0 = taylor_const(expansion.phi_p[k]);
      if (has_inter) row.a_r[k] = 1.0;
      if (has_intra) row.a_r[k_users + k] = 1.0;
      row.a_z = -1.0;
      d.rows.push_back(std::move(row));
    }
  }

  d.validate();
  return d;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void dump_vector(std::ostringstream& os, const char* key,
                 std::span<const double> values) {
  os << key;
  for (double v : values) os << ' ' << fmt_double(v);
  os << '\n';
}

}  // namespace

std::string dump_program(const ConvexProgramDescription& d) {
  std::ostringstream os;
  os << "marsma-subproblem v1\n";
  os << "n_t " << d.n_t << '\n';
  os << "n_users " << d.n_users << '\n';
  os << "n_clusters " << d.n_clusters << '\n';
  os << "noise_power " << fmt_double(d.noise_power) << '\n';
  os << "p_max " << fmt_double(d.p_max) << '\n';
  os << "mode " << layer_mode_name(d.mode) << '\n';
  os << "cluster_of";
  for (int c : d.cluster_of) os << ' ' << c;
  os << '\n';
  os << "matrix_active";
  for (char a : d.matrix_active) os << ' ' << int(a);
  os << '\n';
  os << "rate_active";
  for (char a : d.rate_active) os << ' ' << int(a);
  os << '\n';
  for (int k = 0; k < d.n_users; ++k) {
    os << "channel " << k;
    for (int m = 0; m < d.n_t; ++m) {
      os << ' ' << fmt_double(d.channels[k][m].real()) << ' '
         << fmt_double(d.channels[k][m].imag());
    }
    os << '\n';
  }
  os << "objective max_z\n";
  os << "cones psd_on_active_matrices nonneg_on_active_rates trace_power\n";
  for (const ProgramRow& row : d.rows) {
    os << "row " << row.name << '\n';
    os << "  user " << row.user << '\n';
    os << "  has_log " << (row.has_log ? 1 : 0) << '\n';
    dump_vector(os, "  s_log", row.s_log);
    dump_vector(os, "  s_lin", row.s_lin);
    os << "  a_r";
    for (int i = 0; i < row.a_r.size(); ++i) os << ' ' << fmt_double(row.a_r[i]);
    os << '\n';
    os << "  a_z " << fmt_double(row.a_z) << '\n';
    os << "  c0 " << fmt_double(row.c0) << '\n';
  }
  os << "end\n";
  return os.str();
}

ConvexProgramDescription parse_program(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  auto expect = [&](const char* want) {
    if (!(is >> tok) || tok != want) {
      throw std::runtime_error(std::string("parse error, expected ") + want);
    }
  };
  expect("marsma-subproblem");
  expect("v1");

  ConvexProgramDescription d;
  expect("n_t");
  is >> d.n_t;
  expect("n_users");
  is >> d.n_users;
  expect("n_clusters");
  is >> d.n_clusters;
  expect("noise_power");
  is >> d.noise_power;
  expect("p_max");
  is >> d.p_max;
  expect("mode");
  is >> tok;
  if (tok == "two_layer") {
    d.mode = LayerMode::two_layer;
  } else if (tok == "one_layer") {
    d.mode = LayerMode::one_layer;
  } else if (tok == "sdma") {
    d.mode = LayerMode::sdma;
  } else {
    throw std::runtime_error("unknown mode " + tok);
  }
  const int m_total = d.layout().total();
  expect("cluster_of");
  d.cluster_of.resize(d.n_users);
  for (int& c : d.cluster_of) is >> c;
  expect("matrix_active");
  d.matrix_active.resize(m_total);
  for (char& a : d.matrix_active) {
    int v;
    is >> v;
    a = static_cast<char>(v);
  }
  expect("rate_active");
  d.rate_active.resize(2 * d.n_users);
  for (char& a : d.rate_active) {
    int v;
    is >> v;
    a = static_cast<char>(v);
  }
  d.channels.resize(d.n_users);
  for (int k = 0; k < d.n_users; ++k) {
    expect("channel");
    int idx;
    is >> idx;
    d.channels[idx].resize(d.n_t);
    for (int m = 0; m < d.n_t; ++m) {
      double re, im;
      is >> re >> im;
      d.channels[idx][m] = {re, im};
    }
  }
  expect("objective");
  expect("max_z");
  expect("cones");
  is >> tok >> tok >> tok;
  while (is >> tok) {
    if (tok == "end") break;
    if (tok != "row") throw std::runtime_error("parse error near " + tok);
    ProgramRow row;
    is >> row.name;
    expect("user");
    is >> row.user;
    expect("has_log");
    int hl;
    is >> hl;
    row.has_log = hl != 0;
    expect("s_log");
    row.s_log.resize(m_total);
    for (double& v : row.s_log) is >> v;
    expect("s_lin");
    row.s_lin.resize(m_total);
    for (double& v : row.s_lin) is >> v;
    expect("a_r");
    row.a_r.resize(2 * d.n_users);
    for (int i = 0; i < row.a_r.size(); ++i) is >> row.a_r[i];
    expect("a_z");
    is >> row.a_z;
    expect("c0");
    is >> row.c0;
    d.rows.push_back(std::move(row));
  }
  d.validate();
  return d;
}

namespace {

// Row value with plain complex arithmetic (element loops, no Eigen products),
// kept independent from the solver's packed representation.
double row_value_direct(const ConvexProgramDescription& d, const ProgramRow& row,
                        const LiftedSolution& sol) {
  const Eigen::VectorXcd& h = d.channels[row.user];
  const int m_total = d.layout().total();
  double u = 0.0;
  double lin = 0.0;
  for (int i = 0; i < m_total; ++i) {
    if (row.s_log[i] == 0.0 && row.s_lin[i] == 0.0) continue;
    std::complex<double> acc = 0.0;
    for (int a = 0; a < d.n_t; ++a) {
      for (int b = 0; b < d.n_t; ++b) {
        acc += std::conj(h[a]) * sol.w_mat[i](a, b) * h[b];
      }
    }
    u += row.s_log[i] * acc.real();
    lin += row.s_lin[i] * acc.real();
  }
  double val = lin + row.c0 + row.a_z * sol.z;
  if (row.has_log) val += std::log2(u + d.noise_power);
  for (int k = 0; k < d.n_users; ++k) {
    val += row.a_r[k] * sol.alloc.r_c2[k];
    val += row.a_r[d.n_users + k] * sol.alloc.r_c1[k];
  }
  return val;
}

}  // namespace

ResidualReport verify_solution(const ConvexProgramDescription& d,
                               const LiftedSolution& sol) {
  ResidualReport r;
  r.worst_row = 0.0;
  for (const ProgramRow& row : d.rows) {
    r.worst_row = std::min(r.worst_row, row_value_direct(d, row, sol));
  }
  double trace = 0.0;
  double min_eig = 0.0;
  for (int i = 0; i < d.layout().total(); ++i) {
    if (!d.matrix_active[i]) continue;
    trace += sol.w_mat[i].real().trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sol.w_mat[i],
                                                       Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  r.min_eigenvalue = min_eig;
  r.power_excess_rel = d.p_max > 0.0 ? std::max(0.0, trace / d.p_max - 1.0)
                                     : std::max(0.0, trace);
  double worst_rate = 0.0;
  for (int k = 0; k < d.n_users; ++k) {
    worst_rate = std::min({worst_rate, sol.alloc.r_c2[k], sol.alloc.r_c1[k]});
  }
  r.worst_rate = worst_rate;
  return r;
}

bool ResidualReport::ok(double row_tol, double power_tol, double eig_tol) const {
  return worst_row >= -row_tol && power_excess_rel <= power_tol &&
         min_eigenvalue >= -eig_tol && worst_rate >= -row_tol;
}

double min_row_value(const ConvexProgramDescription& d, const LiftedSolution& sol) {
  double lo = std::numeric_limits<double>::infinity();
  for (const ProgramRow& row : d.rows) {
    lo = std::min(lo, row_value_direct(d, row, sol));
  }
  return lo;
}

}  // namespace marsma
