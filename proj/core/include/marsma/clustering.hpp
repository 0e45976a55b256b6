#pragma once

#include <Eigen/Dense>
#include <span>

#include "marsma/rates.hpp"

namespace marsma {

// |h_a^H h_b| / (|h_a| * |h_b|), in [0, 1]. Throws on a zero-norm channel.
double cosine_similarity(const Eigen::VectorXcd& h_a, const Eigen::VectorXcd& h_b);

// Symmetric pairwise similarity matrix; diagonal left at zero (unused).
Eigen::MatrixXd similarity_matrix(std::span<const Eigen::VectorXcd> channels);

// Greedy fixed-size pairing: repeatedly pulls the most-similar unclustered
// pair into a new cluster; an odd leftover user becomes a singleton. Ties
// break toward the lexicographically smallest (a, b). Cluster indices follow
// extraction order and carry no meaning.
Clustering greedy_pair_clustering(std::span<const Eigen::VectorXcd> channels);

}  // namespace marsma
