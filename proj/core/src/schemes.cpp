#include "marsma/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace marsma {

const char* scheme_name(SchemeId id) {
  switch (id) {
    case SchemeId::proposed_dnppso: return "proposed_dnppso";
    case SchemeId::classic_pso: return "classic_pso";
    case SchemeId::ma2_kmeans: return "ma2_kmeans";
    case SchemeId::ma2_random: return "ma2_random";
    case SchemeId::ma_1rsma: return "ma_1rsma";
    case SchemeId::ma_sdma: return "ma_sdma";
    case SchemeId::fpa_2rsma: return "fpa_2rsma";
    case SchemeId::fpa_1rsma: return "fpa_1rsma";
  }
  return "?";
}

std::optional<SchemeId> parse_scheme(std::string_view name) {
  for (SchemeId id : all_schemes()) {
    if (name == scheme_name(id)) return id;
  }
  return std::nullopt;
}

std::vector<SchemeId> all_schemes() {
  return {SchemeId::proposed_dnppso, SchemeId::classic_pso, SchemeId::ma2_kmeans,
          SchemeId::ma2_random,      SchemeId::ma_1rsma,    SchemeId::ma_sdma,
          SchemeId::fpa_2rsma,       SchemeId::fpa_1rsma};
}

bool scheme_uses_outer_loop(SchemeId id) {
  return id != SchemeId::fpa_2rsma && id != SchemeId::fpa_1rsma;
}

Apv uniform_grid_apv(const GlobalConfig& cfg) {
  Apv apv;
  apv.t.resize(cfg.n_antennas);
  for (int m = 0; m < cfg.n_antennas; ++m) {
    apv.t[m] = cfg.t_min + 0.5 * cfg.wavelength * m;
  }
  if (apv.t[cfg.n_antennas - 1] > cfg.t_max + 1e-12) {
    throw std::invalid_argument("half-wavelength grid exceeds the region");
  }
  return apv;
}

namespace {

Eigen::MatrixXd direction_embedding(std::span<const Eigen::VectorXcd> channels) {
  const int k = static_cast<int>(channels.size());
  const int n_t = static_cast<int>(channels[0].size());
  Eigen::MatrixXd x(k, 2 * n_t);
  for (int u = 0; u < k; ++u) {
    const double norm = channels[u].norm();
    if (norm == 0.0) throw std::invalid_argument("zero channel in clustering");
    for (int m = 0; m < n_t; ++m) {
      x(u, m) = channels[u][m].real() / norm;
      x(u, n_t + m) = channels[u][m].imag() / norm;
    }
  }
  return x;
}

struct KmeansRun {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double objective = std::numeric_limits<double>::infinity();
};

KmeansRun lloyd_once(const Eigen::MatrixXd& x, int q, Rng& rng) {
  const int k = static_cast<int>(x.rows());
  const int dim = static_cast<int>(x.cols());
  KmeansRun run;
  run.centroids.resize(q, dim);

  // k-means++ style seeding
  std::vector<double> d2(k, std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.uniform_index(k));
  run.centroids.row(0) = x.row(first);
  for (int c = 1; c < q; ++c) {
    double total = 0.0;
    for (int u = 0; u < k; ++u) {
      d2[u] = std::min(d2[u], (x.row(u) - run.centroids.row(c - 1)).squaredNorm());
      total += d2[u];
    }
    double pick = rng.uniform() * total;
    int chosen = k - 1;
    for (int u = 0; u < k; ++u) {
      pick -= d2[u];
      if (pick <= 0.0) {
        chosen = u;
        break;
      }
    }
    run.centroids.row(c) = x.row(chosen);
  }

  run.labels.assign(k, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int u = 0; u < k; ++u) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < q; ++c) {
        const double d = (x.row(u) - run.centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best != run.labels[u]) {
        run.labels[u] = best;
        changed = true;
      }
    }
    for (int c = 0; c < q; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
      int count = 0;
      for (int u = 0; u < k; ++u) {
        if (run.labels[u] == c) {
          mean += x.row(u);
          ++count;
        }
      }
      if (count > 0) {
        run.centroids.row(c) = mean / count;
      } else {
        // reseed an empty centroid at the farthest point
        int far = 0;
        double far_d = -1.0;
        for (int u = 0; u < k; ++u) {
          const double d =
              (x.row(u) - run.centroids.row(run.labels[u])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = u;
          }
        }
        run.centroids.row(c) = x.row(far);
        changed = true;
      }
    }
    if (!changed) break;
  }

  run.objective = 0.0;
  for (int u = 0; u < k; ++u) {
    run.objective += (x.row(u) - run.centroids.row(run.labels[u])).squaredNorm();
  }
  return run;
}

}  // namespace

Clustering kmeans_clustering(std::span<const Eigen::VectorXcd> channels,
                             int n_clusters, Rng& rng) {
  const int k = static_cast<int>(channels.size());
  if (k < n_clusters) throw std::invalid_argument("more clusters than users");
  const Eigen::MatrixXd x = direction_embedding(channels);

  KmeansRun best;
  for (int restart = 0; restart < 10; ++restart) {
    KmeansRun run = lloyd_once(x, n_clusters, rng);
    if (run.objective < best.objective) best = std::move(run);
  }

  // capacity-2 repair: move members of overfull clusters to the nearest
  // centroid with room, cheapest move first
  std::vector<int> labels = best.labels;
  std::vector<int> sizes(n_clusters, 0);
  for (int u = 0; u < k; ++u) ++sizes[labels[u]];
  while (true) {
    int worst_cluster = -1;
    for (int c = 0; c < n_clusters; ++c) {
      if (sizes[c] > 2) {
        worst_cluster = c;
        break;
      }
    }
    if (worst_cluster < 0) break;
    int move_user = -1, move_to = -1;
    double move_cost = std::numeric_limits<double>::infinity();
    for (int u = 0; u < k; ++u) {
      if (labels[u] != worst_cluster) continue;
      for (int c = 0; c < n_clusters; ++c) {
        if (sizes[c] >= 2) continue;
        const double d = (x.row(u) - best.centroids.row(c)).squaredNorm();
        if (d < move_cost) {
          move_cost = d;
          move_user = u;
          move_to = c;
        }
      }
    }
    labels[move_user] = move_to;
    --sizes[worst_cluster];
    ++sizes[move_to];
  }

  // compact away empty clusters (cannot occur when n_clusters = ceil(k/2),
  // but labels must stay dense for Clustering)
  std::vector<int> remap(n_clusters, -1);
  int next = 0;
  for (int u = 0; u < k; ++u) {
    if (remap[labels[u]] < 0) remap[labels[u]] = next++;
  }
  for (int u = 0; u < k; ++u) labels[u] = remap[labels[u]];
  return Clustering::from_assignment(std::move(labels));
}

Clustering random_clustering(int n_users, Rng& rng) {
  if (n_users < 1) throw std::invalid_argument("need at least one user");
  std::vector<int> perm(n_users);
  for (int i = 0; i < n_users; ++i) perm[i] = i;
  for (int i = n_users - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_index(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> labels(n_users, 0);
  int q = 0;
  for (int i = 0; i + 1 < n_users; i += 2) {
    labels[perm[i]] = q;
    labels[perm[i + 1]] = q;
    ++q;
  }
  if (n_users % 2 == 1) labels[perm[n_users - 1]] = q;
  return Clustering::from_assignment(std::move(labels));
}

SchemeResult run_scheme(SchemeId id, const Scenario& scenario,
                        const PsoConfig& pso, const InnerOptions& base) {
  SchemeResult out;
  out.id = id;

  InnerOptions inner = base;
  inner.cluster_seed = derive_seed(pso.seed, {0xC1});
  switch (id) {
    case SchemeId::proposed_dnppso:
    case SchemeId::classic_pso:
    case SchemeId::fpa_2rsma:
      break;
    case SchemeId::ma2_kmeans:
      inner.clustering = ClusteringKind::kmeans;
      break;
    case SchemeId::ma2_random:
      inner.clustering = ClusteringKind::random;
      break;
    case SchemeId::ma_1rsma:
    case SchemeId::fpa_1rsma:
      inner.mode = LayerMode::one_layer;
      break;
    case SchemeId::ma_sdma:
      inner.mode = LayerMode::sdma;
      break;
  }

  if (!scheme_uses_outer_loop(id)) {
    out.apv = uniform_grid_apv(scenario.config);
    out.inner = solve_inner(out.apv, scenario, inner);
    out.min_rate = out.inner.min_rate;
    out.inner_evaluations = 1;
    return out;
  }

  PsoConfig cfg = pso;
  if (id == SchemeId::classic_pso) cfg.prune_enabled = false;
  OuterResult res = run_outer(scenario, cfg, inner);
  out.apv = res.best_apv;
  out.inner = std::move(res.best_inner);
  out.min_rate = out.inner.min_rate;
  out.inner_evaluations = res.evaluations;
  return out;
}

}  // namespace marsma
