#include "marsma/clustering.hpp"

#include <stdexcept>
#include <vector>

namespace marsma {

double cosine_similarity(const Eigen::VectorXcd& h_a, const Eigen::VectorXcd& h_b) {
  const double na = h_a.norm();
  const double nb = h_b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("cosine similarity of a zero channel");
  }
  return std::abs(h_a.dot(h_b)) / (na * nb);
}

Eigen::MatrixXd similarity_matrix(std::span<const Eigen::VectorXcd> channels) {
  const int k = static_cast<int>(channels.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      c(a, b) = c(b, a) = cosine_similarity(channels[a], channels[b]);
    }
  }
  return c;
}

Clustering greedy_pair_clustering(std::span<const Eigen::VectorXcd> channels) {
  const int k = static_cast<int>(channels.size());
  if (k < 1) throw std::invalid_argument("need at least one user");

  Clustering out;
  out.cluster_of.assign(k, -1);
  if (k == 1) {
    out.cluster_of[0] = 0;
    out.members = {{0}};
    return out;
  }

  const Eigen::MatrixXd c = similarity_matrix(channels);
  std::vector<bool> unclustered(k, true);
  int remaining = k;
  while (remaining >= 2) {
    int best_a = -1, best_b = -1;
    double best = -1.0;
    for (int a = 0; a < k; ++a) {
      if (!unclustered[a]) continue;
      for (int b = a + 1; b < k; ++b) {
        if (!unclustered[b]) continue;
        if (c(a, b) > best) {  // strict >, so ties keep the smallest (a, b)
          best = c(a, b);
          best_a = a;
          best_b = b;
        }
      }
    }
    const int q = static_cast<int>(out.members.size());
    out.members.push_back({best_a, best_b});
    out.cluster_of[best_a] = q;
    out.cluster_of[best_b] = q;
    unclustered[best_a] = unclustered[best_b] = false;
    remaining -= 2;
  }
  if (remaining == 1) {
    for (int u = 0; u < k; ++u) {
      if (unclustered[u]) {
        out.cluster_of[u] = static_cast<int>(out.members.size());
        out.members.push_back({u});
        break;
      }
    }
  }
  out.validate();
  return out;
}

}  // namespace marsma
