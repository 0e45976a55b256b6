#include "marsma/channel.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

namespace marsma {

namespace {

using json = nlohmann::ordered_json;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

int GlobalConfig::max_antennas_in_region() const {
  return static_cast<int>(std::floor((t_max - t_min) / d0)) + 1;
}

void GlobalConfig::validate() const {
  require(n_antennas >= 1, "n_antennas must be >= 1");
  require(n_users >= 1, "n_users must be >= 1");
  require(n_paths >= 1, "n_paths must be >= 1");
  require(wavelength > 0.0, "wavelength must be positive");
  require(t_max > t_min, "t_max must exceed t_min");
  require(d0 > 0.0, "d0 must be positive");
  require(n_antennas <= max_antennas_in_region(),
          "antenna region too small for n_antennas at spacing d0");
  require(p_max > 0.0, "p_max must be positive");
  require(noise_power > 0.0, "noise_power must be positive");
  require(path_loss_ref > 0.0, "path_loss_ref must be positive");
  require(dist_min > 0.0 && dist_max >= dist_min, "bad distance range");
  require(angle_max >= angle_min, "bad angle range");
}

bool Apv::in_bounds(const GlobalConfig& cfg, double tol) const {
  for (int m = 0; m < t.size(); ++m) {
    if (t[m] < cfg.t_min - tol || t[m] > cfg.t_max + tol) return false;
  }
  return true;
}

bool Apv::spacing_ok(double d0, double tol) const {
  for (int i = 0; i < t.size(); ++i) {
    for (int j = i + 1; j < t.size(); ++j) {
      if (std::abs(t[i] - t[j]) < d0 - tol) return false;
    }
  }
  return true;
}

bool Apv::feasible(const GlobalConfig& cfg, double tol) const {
  return in_bounds(cfg, tol) && spacing_ok(cfg.d0, tol);
}

int spacing_violation_count(const Apv& apv, double d0) {
  const int n = static_cast<int>(apv.t.size());
  std::vector<bool> bad(n, false);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(apv.t[i] - apv.t[j]) < d0) {
        bad[i] = true;
        bad[j] = true;
      }
    }
  }
  int count = 0;
  for (bool b : bad) count += b ? 1 : 0;
  return count;
}

Eigen::VectorXcd field_response_vector(double t_m, std::span<const double> angles,
                                       double wavelength) {
  require(std::isfinite(t_m), "antenna coordinate must be finite");
  require(std::isfinite(wavelength) && wavelength > 0.0,
          "wavelength must be finite and positive");
  Eigen::VectorXcd frv(static_cast<Eigen::Index>(angles.size()));
  const double scale = 2.0 * kPi / wavelength;
  for (std::size_t l = 0; l < angles.size(); ++l) {
    require(std::isfinite(angles[l]), "path angle must be finite");
    const double phase = scale * t_m * std::cos(angles[l]);
    frv[static_cast<Eigen::Index>(l)] = {std::cos(phase), std::sin(phase)};
  }
  return frv;
}

Eigen::VectorXcd channel_vector(const Apv& apv, const UserPaths& user,
                                double wavelength) {
  require(static_cast<Eigen::Index>(user.angles.size()) == user.gains.size(),
          "angle/gain dimension mismatch");
  Eigen::VectorXcd h(apv.t.size());
  for (int m = 0; m < apv.t.size(); ++m) {
    const Eigen::VectorXcd frv =
        field_response_vector(apv.t[m], user.angles, wavelength);
    h[m] = frv.dot(user.gains);  // Eigen dot conjugates the left argument
  }
  return h;
}

std::vector<Eigen::VectorXcd> channel_vectors(const Apv& apv, const Scenario& sc) {
  std::vector<Eigen::VectorXcd> h;
  h.reserve(sc.users.size());
  for (const UserPaths& u : sc.users) {
    h.push_back(channel_vector(apv, u, sc.config.wavelength));
  }
  return h;
}

Scenario sample_scenario(const GlobalConfig& cfg, Rng& rng) {
  cfg.validate();
  Scenario sc;
  sc.config = cfg;
  sc.users.resize(cfg.n_users);
  for (UserPaths& u : sc.users) {
    u.distance = rng.uniform(cfg.dist_min, cfg.dist_max);
    u.angles.resize(cfg.n_paths);
    for (double& a : u.angles) a = rng.uniform(cfg.angle_min, cfg.angle_max);
    const double per_path_var =
        cfg.path_loss_ref * std::pow(u.distance, -cfg.path_loss_exp) / cfg.n_paths;
    u.gains.resize(cfg.n_paths);
    for (int l = 0; l < cfg.n_paths; ++l) u.gains[l] = rng.cgauss(per_path_var);
  }
  return sc;
}

namespace {

json config_to_json(const GlobalConfig& c) {
  json j;
  j["n_antennas"] = c.n_antennas;
  j["n_users"] = c.n_users;
  j["n_paths"] = c.n_paths;
  j["wavelength"] = c.wavelength;
  j["t_min"] = c.t_min;
  j["t_max"] = c.t_max;
  j["d0"] = c.d0;
  j["p_max"] = c.p_max;
  j["noise_power"] = c.noise_power;
  j["path_loss_ref"] = c.path_loss_ref;
  j["path_loss_exp"] = c.path_loss_exp;
  j["dist_min"] = c.dist_min;
  j["dist_max"] = c.dist_max;
  j["angle_min"] = c.angle_min;
  j["angle_max"] = c.angle_max;
  return j;
}

GlobalConfig config_from_json(const json& j) {
  GlobalConfig c;
  c.n_antennas = j.at("n_antennas").get<int>();
  c.n_users = j.at("n_users").get<int>();
  c.n_paths = j.at("n_paths").get<int>();
  c.wavelength = j.at("wavelength").get<double>();
  c.t_min = j.at("t_min").get<double>();
  c.t_max = j.at("t_max").get<double>();
  c.d0 = j.at("d0").get<double>();
  c.p_max = j.at("p_max").get<double>();
  c.noise_power = j.at("noise_power").get<double>();
  c.path_loss_ref = j.at("path_loss_ref").get<double>();
  c.path_loss_exp = j.at("path_loss_exp").get<double>();
  c.dist_min = j.at("dist_min").get<double>();
  c.dist_max = j.at("dist_max").get<double>();
  c.angle_min = j.at("angle_min").get<double>();
  c.angle_max = j.at("angle_max").get<double>();
  return c;
}

}  // namespace

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["config"] = config_to_json(sc.config);
  json users = json::array();
  for (const UserPaths& u : sc.users) {
    json ju;
    ju["distance"] = u.distance;
    ju["angles"] = u.angles;
    json gains = json::array();
    for (int l = 0; l < u.gains.size(); ++l) {
      gains.push_back({u.gains[l].real(), u.gains[l].imag()});
    }
    ju["gains"] = gains;
    users.push_back(std::move(ju));
  }
  j["users"] = std::move(users);
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  const json j = json::parse(text);
  Scenario sc;
  sc.config = config_from_json(j.at("config"));
  for (const json& ju : j.at("users")) {
    UserPaths u;
    u.distance = ju.at("distance").get<double>();
    u.angles = ju.at("angles").get<std::vector<double>>();
    const json& gains = ju.at("gains");
    u.gains.resize(static_cast<Eigen::Index>(gains.size()));
    for (std::size_t l = 0; l < gains.size(); ++l) {
      u.gains[static_cast<Eigen::Index>(l)] = {gains[l][0].get<double>(),
                                               gains[l][1].get<double>()};
    }
    sc.users.push_back(std::move(u));
  }
  return sc;
}

std::uint64_t scenario_digest(const Scenario& sc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto eat = [&h](double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  eat(static_cast<double>(sc.users.size()));
  for (const UserPaths& u : sc.users) {
    eat(u.distance);
    for (double a : u.angles) eat(a);
    for (int l = 0; l < u.gains.size(); ++l) {
      eat(u.gains[l].real());
      eat(u.gains[l].imag());
    }
  }
  return h;
}

}  // namespace marsma
