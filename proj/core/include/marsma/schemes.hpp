#pragma once

#include <optional>
#include <string_view>

#include "marsma/dnppso.hpp"

namespace marsma {

// Benchmark registry: each scheme is the proposed pipeline with exactly one
// component swapped, so comparisons isolate that component.
enum class SchemeId {
  proposed_dnppso,  // DNPPSO + greedy pairing + two-layer streams
  classic_pso,      // pruning disabled
  ma2_kmeans,       // greedy pairing replaced by capacity-2 k-means
  ma2_random,       // random pairing
  ma_1rsma,         // intra-cluster common streams removed
  ma_sdma,          // private streams only
  fpa_2rsma,        // fixed half-wavelength grid, no outer loop
  fpa_1rsma,        // fixed grid, one-layer streams
};

const char* scheme_name(SchemeId id);
std::optional<SchemeId> parse_scheme(std::string_view name);
std::vector<SchemeId> all_schemes();
bool scheme_uses_outer_loop(SchemeId id);

// Half-wavelength uniform grid anchored at t_min, the fixed-antenna baseline.
Apv uniform_grid_apv(const GlobalConfig& cfg);

// Lloyd k-means on the real embedding of direction-normalized channels, with
// seeded restarts and a capacity-2 repair pass so cluster sizes match the
// greedy pairing (all pairs plus one singleton when K is odd).
Clustering kmeans_clustering(std::span<const Eigen::VectorXcd> channels,
                             int n_clusters, Rng& rng);

// Uniformly random pairing; odd K leaves one singleton.
Clustering random_clustering(int n_users, Rng& rng);

struct SchemeResult {
  SchemeId id = SchemeId::proposed_dnppso;
  double min_rate = 0.0;
  long long inner_evaluations = 0;
  Apv apv;
  InnerResult inner;
};

// Runs one scheme on one realization. PSO-based schemes consume pso.seed
// (restarts included); fixed-antenna schemes perform a single inner solve.
SchemeResult run_scheme(SchemeId id, const Scenario& scenario,
                        const PsoConfig& pso, const InnerOptions& base = {});

}  // namespace marsma
