#include <doctest.h>

#include <cmath>

#include "marsma/clustering.hpp"
#include "marsma/rng.hpp"

using namespace marsma;

namespace {

std::vector<Eigen::VectorXcd> random_channels(Rng& rng, int k, int n_t) {
  std::vector<Eigen::VectorXcd> h(k);
  for (auto& v : h) {
    v.resize(n_t);
    for (int m = 0; m < n_t; ++m) v[m] = rng.cgauss(1.0);
  }
  return h;
}

// Literal re-implementation of the greedy pairing loop, with naive scans.
Clustering oracle_greedy(const std::vector<Eigen::VectorXcd>& h) {
  const int k = static_cast<int>(h.size());
  std::vector<int> assign(k, -1);
  std::vector<int> pool(k);
  for (int i = 0; i < k; ++i) pool[i] = i;
  int q = 0;
  while (static_cast<int>(pool.size()) >= 2) {
    int best_a = -1, best_b = -1;
    double best = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        const int a = std::min(pool[i], pool[j]);
        const int b = std::max(pool[i], pool[j]);
        const double c = std::abs(h[a].dot(h[b])) / (h[a].norm() * h[b].norm());
        if (c > best + 1e-15 ||
            (std::abs(c - best) <= 1e-15 &&
             (a < best_a || (a == best_a && b < best_b)))) {
          best = c;
          best_a = a;
          best_b = b;
        }
      }
    }
    assign[best_a] = assign[best_b] = q++;
    std::erase(pool, best_a);
    std::erase(pool, best_b);
  }
  if (pool.size() == 1) assign[pool[0]] = q;
  return Clustering::from_assignment(std::move(assign));
}

}  // namespace

TEST_CASE("cosine similarity") {
  Eigen::VectorXcd a(2), b(2);

  SUBCASE("identical vectors give 1") {
    a << std::complex<double>(1.0, 2.0), std::complex<double>(-0.5, 0.3);
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("orthogonal vectors give 0") {
    a << 1.0, 0.0;
    b << 0.0, 1.0;
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
  }

  SUBCASE("known value 1/sqrt(2)") {
    a << 1.0, 0.0;
    b << 1.0, 1.0;
    CHECK(cosine_similarity(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)));
  }

  SUBCASE("phase rotation does not matter") {
    Rng rng(3);
    a << rng.cgauss(1.0), rng.cgauss(1.0);
    b = std::polar(1.0, 0.77) * a;
    CHECK(cosine_similarity(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("zero channel rejected") {
    a << 1.0, 0.0;
    b << 0.0, 0.0;
    CHECK_THROWS_AS(cosine_similarity(a, b), std::invalid_argument);
  }

  SUBCASE("bounded in [0, 1] and symmetric") {
    Rng rng(5);
    const auto h = random_channels(rng, 5, 3);
    const Eigen::MatrixXd c = similarity_matrix(h);
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) {
        CHECK(c(i, j) >= 0.0);
        CHECK(c(i, j) <= 1.0 + 1e-12);
        CHECK(c(i, j) == c(j, i));
      }
    }
  }
}

TEST_CASE("greedy pairing") {
  SUBCASE("single user becomes a singleton cluster") {
    Rng rng(1);
    const auto h = random_channels(rng, 1, 2);
    const Clustering c = greedy_pair_clustering(h);
    CHECK(c.n_clusters() == 1);
    CHECK(c.members[0] == std::vector<int>{0});
  }

  SUBCASE("constructed four-user instance pairs as traced by hand") {
    // make channel directions so that c01 ~ 0.995, c23 ~ 0.98, cross terms small
    std::vector<Eigen::VectorXcd> h(4, Eigen::VectorXcd::Zero(2));
    h[0] << 1.0, 0.0;
    h[1] << 1.0, 0.1;
    h[2] << 0.0, 1.0;
    h[3] << 0.2, 1.0;
    const Clustering c = greedy_pair_clustering(h);
    CHECK(c.cluster_of[0] == c.cluster_of[1]);
    CHECK(c.cluster_of[2] == c.cluster_of[3]);
    CHECK(c.cluster_of[0] != c.cluster_of[2]);
    // first extracted pair attains the global maximum
    const Eigen::MatrixXd sim = similarity_matrix(h);
    double global = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) global = std::max(global, sim(i, j));
    }
    CHECK(sim(0, 1) == doctest::Approx(global));
    CHECK(c.cluster_of[0] == 0);  // extraction order assigns cluster 0 first
  }

  SUBCASE("odd user count leaves exactly one singleton") {
    std::vector<Eigen::VectorXcd> h(3, Eigen::VectorXcd::Zero(2));
    h[0] << 1.0, 0.0;
    h[1] << 1.0, 0.05;
    h[2] << 0.0, 1.0;
    const Clustering c = greedy_pair_clustering(h);
    CHECK(c.n_clusters() == 2);
    CHECK(c.cluster_of[0] == c.cluster_of[1]);
    CHECK(c.members[1] == std::vector<int>{2});
  }

  SUBCASE("partition shape: pairs plus at most one singleton") {
    Rng rng(11);
    for (int k = 1; k <= 7; ++k) {
      const auto h = random_channels(rng, k, 3);
      const Clustering c = greedy_pair_clustering(h);
      c.validate();
      CHECK(c.n_clusters() == (k + 1) / 2);
      int singletons = 0;
      for (const auto& ms : c.members) {
        CHECK(ms.size() <= 2);
        singletons += ms.size() == 1 ? 1 : 0;
      }
      CHECK(singletons == k % 2);
    }
  }

  SUBCASE("reproduces the literal loop oracle for K up to 6") {
    Rng rng(21);
    for (int trial = 0; trial < 40; ++trial) {
      const int k = 1 + static_cast<int>(rng.uniform_index(6));
      const auto h = random_channels(rng, k, 3);
      const Clustering mine = greedy_pair_clustering(h);
      const Clustering ref = oracle_greedy(h);
      CHECK(mine.cluster_of == ref.cluster_of);
    }
  }

  SUBCASE("deterministic on repeated calls") {
    Rng rng(31);
    const auto h = random_channels(rng, 6, 4);
    const Clustering a = greedy_pair_clustering(h);
    const Clustering b = greedy_pair_clustering(h);
    CHECK(a.cluster_of == b.cluster_of);
  }
}
