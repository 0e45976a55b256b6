#include "marsma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "marsma/units.hpp"

namespace marsma {

namespace {

thread_local int parallel_depth = 0;

}  // namespace

int worker_pool_size() {
  if (const char* env = std::getenv("MARSMA_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(parallel_depth == 0 ? worker_pool_size() : 1, n);
  if (workers <= 1) {
    ++parallel_depth;
    for (int i = 0; i < n; ++i) fn(i);
    --parallel_depth;
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    ++parallel_depth;
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    --parallel_depth;
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::n_users: return "n_users";
    case SweepAxis::p_max_dbm: return "p_max_dbm";
    case SweepAxis::n_antennas: return "n_antennas";
    case SweepAxis::max_distance: return "max_distance";
  }
  return "?";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::n_users, SweepAxis::p_max_dbm,
                      SweepAxis::n_antennas, SweepAxis::max_distance}) {
    if (name == sweep_axis_name(a)) return a;
  }
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  base.validate();
  pso.validate();
  if (realizations < 1) throw std::invalid_argument("realizations must be >= 1");
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) {
      throw std::invalid_argument("sweep values must be strictly increasing");
    }
  }
  if (schemes.empty()) throw std::invalid_argument("no schemes selected");
  for (double v : values) config_for_sweep_value(base, axis, v).validate();
}

GlobalConfig config_for_sweep_value(const GlobalConfig& base, SweepAxis axis,
                                    double value) {
  GlobalConfig cfg = base;
  switch (axis) {
    case SweepAxis::n_users:
      cfg.n_users = static_cast<int>(std::lround(value));
      break;
    case SweepAxis::p_max_dbm:
      cfg.p_max = dbm_to_watts(value);
      break;
    case SweepAxis::n_antennas:
      cfg.n_antennas = static_cast<int>(std::lround(value));
      break;
    case SweepAxis::max_distance:
      cfg.dist_max = value;
      break;
  }
  return cfg;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      std::vector<RawRecord>* raw) {
  spec.validate();
  const int n_values = static_cast<int>(spec.values.size());
  const int n_schemes = static_cast<int>(spec.schemes.size());
  const int cells = n_values * spec.realizations;

  struct Cell {
    std::vector<RawRecord> records;
    std::vector<double> wall_ms;
  };
  std::vector<Cell> results(cells);

  parallel_for(cells, [&](int cell) {
    const int vi = cell / spec.realizations;
    const int re = cell % spec.realizations;
    const GlobalConfig cfg =
        config_for_sweep_value(spec.base, spec.axis, spec.values[vi]);

    Rng scenario_rng(derive_seed(spec.master_seed,
                                 {0xA0, (std::uint64_t)vi, (std::uint64_t)re}));
    const Scenario scenario = sample_scenario(cfg, scenario_rng);
    const std::uint64_t digest = scenario_digest(scenario);

    Cell& out = results[cell];
    out.records.resize(n_schemes);
    out.wall_ms.resize(n_schemes, 0.0);
    for (int si = 0; si < n_schemes; ++si) {
      RawRecord rec;
      rec.value_index = vi;
      rec.sweep_value = spec.values[vi];
      rec.realization = re;
      rec.scheme = spec.schemes[si];
      rec.scenario_digest = digest;
      PsoConfig pso = spec.pso;
      pso.seed = derive_seed(spec.master_seed, {0xB0, (std::uint64_t)vi,
                                                (std::uint64_t)re,
                                                (std::uint64_t)si});
      const auto start = std::chrono::steady_clock::now();
      try {
        const SchemeResult sr =
            run_scheme(spec.schemes[si], scenario, pso, spec.inner);
        rec.min_rate = sr.min_rate;
        rec.evals = sr.inner_evaluations;
      } catch (const std::exception&) {
        rec.failed = true;
      }
      const auto stop = std::chrono::steady_clock::now();
      out.wall_ms[si] =
          std::chrono::duration<double, std::milli>(stop - start).count();
      out.records[si] = rec;
    }
  });

  // deterministic reduction in (value, scheme, realization) order
  std::vector<ResultRow> rows;
  rows.reserve(static_cast<std::size_t>(n_values) * n_schemes);
  for (int vi = 0; vi < n_values; ++vi) {
    for (int si = 0; si < n_schemes; ++si) {
      ResultRow row;
      row.axis = spec.axis;
      row.sweep_value = spec.values[vi];
      row.scheme = spec.schemes[si];
      double sum = 0.0, sum_sq = 0.0, evals = 0.0, wall = 0.0;
      int n = 0;
      for (int re = 0; re < spec.realizations; ++re) {
        const Cell& cell = results[vi * spec.realizations + re];
        const RawRecord& rec = cell.records[si];
        if (raw) raw->push_back(rec);
        wall += cell.wall_ms[si];
        if (rec.failed) continue;
        sum += rec.min_rate;
        sum_sq += rec.min_rate * rec.min_rate;
        evals += static_cast<double>(rec.evals);
        ++n;
      }
      row.n = n;
      if (n > 0) {
        row.mean_minrate = sum / n;
        row.evals_mean = evals / n;
        if (n > 1) {
          const double var =
              std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
          row.std_minrate = std::sqrt(var);
        }
      }
      row.wall_ms = wall;
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string results_to_csv(std::span<const ResultRow> rows, bool include_timing) {
  std::ostringstream os;
  os << "sweep_axis,sweep_value,scheme,mean_minrate,std_minrate,n,evals_mean,"
        "wall_ms\n";
  for (const ResultRow& r : rows) {
    os << sweep_axis_name(r.axis) << ',' << fmt6(r.sweep_value) << ','
       << scheme_name(r.scheme) << ',' << fmt6(r.mean_minrate) << ','
       << fmt6(r.std_minrate) << ',' << r.n << ',' << fmt6(r.evals_mean) << ','
       << fmt6(include_timing ? r.wall_ms : 0.0) << '\n';
  }
  return os.str();
}

void emit_csv(std::span<const ResultRow> rows, const std::string& path,
              bool include_timing) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << results_to_csv(rows, include_timing);
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_raw_dump(std::span<const RawRecord> records, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "value_index,sweep_value,realization,scheme,min_rate,evals,"
        "scenario_digest,failed\n";
  for (const RawRecord& r : records) {
    os << r.value_index << ',' << fmt6(r.sweep_value) << ',' << r.realization
       << ',' << scheme_name(r.scheme) << ',' << fmt6(r.min_rate) << ','
       << r.evals << ',' << r.scenario_digest << ',' << (r.failed ? 1 : 0)
       << '\n';
  }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> load_key_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_key_values(buf.str());
}

namespace {

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("bad number: " + v);
  return x;
}

int to_int(const std::string& v) {
  std::size_t used = 0;
  const int x = std::stoi(v, &used);
  if (used != v.size()) throw std::invalid_argument("bad integer: " + v);
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

void apply_config_key(ExperimentSpec& spec, const std::string& key,
                      const std::string& value) {
  GlobalConfig& g = spec.base;
  PsoConfig& p = spec.pso;
  if (key == "n_antennas") g.n_antennas = to_int(value);
  else if (key == "n_users") g.n_users = to_int(value);
  else if (key == "n_paths") g.n_paths = to_int(value);
  else if (key == "wavelength") g.wavelength = to_double(value);
  else if (key == "t_min") g.t_min = to_double(value);
  else if (key == "t_max") g.t_max = to_double(value);
  else if (key == "t_max_lambda") g.t_max = to_double(value) * g.wavelength;
  else if (key == "d0") g.d0 = to_double(value);
  else if (key == "d0_lambda") g.d0 = to_double(value) * g.wavelength;
  else if (key == "p_max") g.p_max = to_double(value);
  else if (key == "p_max_dbm") g.p_max = dbm_to_watts(to_double(value));
  else if (key == "noise_power") g.noise_power = to_double(value);
  else if (key == "noise_power_dbm") g.noise_power = dbm_to_watts(to_double(value));
  else if (key == "path_loss_ref") g.path_loss_ref = to_double(value);
  else if (key == "path_loss_ref_db") g.path_loss_ref = db_to_linear(to_double(value));
  else if (key == "path_loss_exp") g.path_loss_exp = to_double(value);
  else if (key == "dist_min") g.dist_min = to_double(value);
  else if (key == "dist_max") g.dist_max = to_double(value);
  else if (key == "angle_min") g.angle_min = to_double(value);
  else if (key == "angle_max") g.angle_max = to_double(value);
  else if (key == "particles") p.particles = to_int(value);
  else if (key == "iterations") p.iterations = to_int(value);
  else if (key == "c1") p.c1 = to_double(value);
  else if (key == "c2") p.c2 = to_double(value);
  else if (key == "omega_min") p.omega_min = to_double(value);
  else if (key == "omega_max") p.omega_max = to_double(value);
  else if (key == "penalty") p.penalty = to_double(value);
  else if (key == "beta") p.beta = to_double(value);
  else if (key == "v_max") p.v_max = to_double(value);
  else if (key == "restarts") p.restarts = to_int(value);
  else if (key == "sca_eps") spec.inner.sca_eps = to_double(value);
  else if (key == "sca_max_iters") spec.inner.sca_max_iters = to_int(value);
  else if (key == "sweep_axis") {
    const auto axis = parse_sweep_axis(value);
    if (!axis) throw std::invalid_argument("unknown sweep axis: " + value);
    spec.axis = *axis;
  } else if (key == "sweep_values") {
    spec.values.clear();
    for (const std::string& item : split_list(value)) {
      spec.values.push_back(to_double(item));
    }
  } else if (key == "schemes") {
    spec.schemes.clear();
    for (const std::string& item : split_list(value)) {
      const auto id = parse_scheme(item);
      if (!id) throw std::invalid_argument("unknown scheme: " + item);
      spec.schemes.push_back(*id);
    }
  } else if (key == "realizations") {
    spec.realizations = to_int(value);
  } else if (key == "master_seed" || key == "seed") {
    spec.master_seed = std::stoull(value);
  } else if (key == "output") {
    spec.output_path = value;
  } else if (key == "raw_dump") {
    spec.raw_dump_path = value;
  } else if (key == "timing") {
    spec.timing_in_csv = to_int(value) != 0;
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

ExperimentSpec spec_from_key_values(const std::map<std::string, std::string>& kv) {
  ExperimentSpec spec;
  // wavelength first so *_lambda keys resolve against the configured value
  if (auto it = kv.find("wavelength"); it != kv.end()) {
    apply_config_key(spec, it->first, it->second);
  }
  for (const auto& [key, value] : kv) {
    if (key == "wavelength") continue;
    apply_config_key(spec, key, value);
  }
  return spec;
}

namespace {

using json = nlohmann::ordered_json;

json cvec_to_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

Eigen::VectorXcd cvec_from_json(const json& j) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = {j[i][0].get<double>(),
                                       j[i][1].get<double>()};
  }
  return v;
}

}  // namespace

std::string fixture_to_json(const SolutionFixture& fx) {
  json j;
  j["scenario"] = json::parse(scenario_to_json(fx.scenario));
  j["apv"] = std::vector<double>(fx.apv.t.data(), fx.apv.t.data() + fx.apv.t.size());
  j["clustering"] = fx.clustering.cluster_of;
  json beams;
  beams["w_c2"] = cvec_to_json(fx.beams.w_c2);
  json w_c1 = json::array();
  for (const auto& w : fx.beams.w_c1) w_c1.push_back(cvec_to_json(w));
  beams["w_c1"] = std::move(w_c1);
  json w_p = json::array();
  for (const auto& w : fx.beams.w_p) w_p.push_back(cvec_to_json(w));
  beams["w_p"] = std::move(w_p);
  j["beamformers"] = std::move(beams);
  j["allocation"]["r_c2"] = std::vector<double>(
      fx.alloc.r_c2.data(), fx.alloc.r_c2.data() + fx.alloc.r_c2.size());
  j["allocation"]["r_c1"] = std::vector<double>(
      fx.alloc.r_c1.data(), fx.alloc.r_c1.data() + fx.alloc.r_c1.size());
  return j.dump(2);
}

SolutionFixture fixture_from_json(const std::string& text) {
  const json j = json::parse(text);
  SolutionFixture fx;
  fx.scenario = scenario_from_json(j.at("scenario").dump());
  const auto apv = j.at("apv").get<std::vector<double>>();
  fx.apv.t = Eigen::Map<const Eigen::VectorXd>(apv.data(),
                                               static_cast<Eigen::Index>(apv.size()));
  fx.clustering = Clustering::from_assignment(j.at("clustering").get<std::vector<int>>());
  const json& beams = j.at("beamformers");
  fx.beams.w_c2 = cvec_from_json(beams.at("w_c2"));
  for (const json& w : beams.at("w_c1")) fx.beams.w_c1.push_back(cvec_from_json(w));
  for (const json& w : beams.at("w_p")) fx.beams.w_p.push_back(cvec_from_json(w));
  const auto r_c2 = j.at("allocation").at("r_c2").get<std::vector<double>>();
  const auto r_c1 = j.at("allocation").at("r_c1").get<std::vector<double>>();
  fx.alloc.r_c2 = Eigen::Map<const Eigen::VectorXd>(
      r_c2.data(), static_cast<Eigen::Index>(r_c2.size()));
  fx.alloc.r_c1 = Eigen::Map<const Eigen::VectorXd>(
      r_c1.data(), static_cast<Eigen::Index>(r_c1.size()));
  return fx;
}

}  // namespace marsma
