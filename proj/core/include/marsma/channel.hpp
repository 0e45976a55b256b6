#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "marsma/rng.hpp"

namespace marsma {

// System-level parameters of one simulated deployment. Angles are radians,
// distances/positions meters, powers linear watts.
struct GlobalConfig {
  int n_antennas = 4;
  int n_users = 6;
  int n_paths = 6;
  double wavelength = 0.1;
  double t_min = 0.0;
  double t_max = 1.0;
  double d0 = 0.05;            // minimum inter-antenna spacing
  double p_max = 1.0;          // transmit power budget
  double noise_power = 1e-12;
  double path_loss_ref = 1e-3; // channel power gain at 1 m
  double path_loss_exp = 2.8;
  double dist_min = 20.0;
  double dist_max = 150.0;
  double angle_min = 0.0;
  double angle_max = kPi;

  // How many antennas the linear region can hold at spacing d0.
  int max_antennas_in_region() const;

  // Throws std::invalid_argument when any invariant is broken.
  void validate() const;
};

// Multipath geometry and gains for one user.
struct UserPaths {
  double distance = 0.0;
  std::vector<double> angles;  // departure angle per path
  Eigen::VectorXcd gains;      // complex gain per path
};

// One channel realization: per-user path parameters plus the config they
// were drawn under.
struct Scenario {
  GlobalConfig config;
  std::vector<UserPaths> users;
};

// Antenna position vector. Feasibility (region bounds and pairwise spacing)
// is a queryable predicate, not a construction invariant: the outer-loop
// search deliberately visits infeasible points under penalty.
struct Apv {
  Eigen::VectorXd t;

  bool in_bounds(const GlobalConfig& cfg, double tol = 0.0) const;
  bool spacing_ok(double d0, double tol = 0.0) const;
  bool feasible(const GlobalConfig& cfg, double tol = 0.0) const;
};

// Number of antennas that sit closer than d0 to at least one other antenna.
// Both endpoints of a violating pair count.
int spacing_violation_count(const Apv& apv, double d0);

// Per-path unit phasors of one antenna at coordinate t_m:
// element l = exp(j * (2*pi/wavelength) * t_m * cos(angle_l)).
Eigen::VectorXcd field_response_vector(double t_m, std::span<const double> angles,
                                       double wavelength);

// Channel vector entry m = conj(frv(t_m)) . gains.
Eigen::VectorXcd channel_vector(const Apv& apv, const UserPaths& user,
                                double wavelength);

std::vector<Eigen::VectorXcd> channel_vectors(const Apv& apv, const Scenario& sc);

// Draws angles and distances uniformly and path gains as i.i.d. circularly
// symmetric complex Gaussians with per-path variance
// path_loss_ref * distance^-path_loss_exp / n_paths.
// Per user the draw order is: distance, angles, gains.
Scenario sample_scenario(const GlobalConfig& cfg, Rng& rng);

// Lossless JSON round-trip (doubles survive bit-exactly).
std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& text);

// FNV-1a digest over the scenario's raw doubles; used to assert that paired
// scheme comparisons really saw the same draw.
std::uint64_t scenario_digest(const Scenario& sc);

}  // namespace marsma
