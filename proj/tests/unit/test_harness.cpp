#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "marsma/harness.hpp"
#include "marsma/units.hpp"

using namespace marsma;

namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.base.n_antennas = 2;
  spec.base.n_users = 2;
  spec.base.n_paths = 2;
  spec.pso.particles = 3;
  spec.pso.iterations = 2;
  spec.pso.restarts = 1;
  spec.axis = SweepAxis::p_max_dbm;
  spec.values = {25.0, 30.0};
  spec.schemes = {SchemeId::fpa_2rsma, SchemeId::ma_sdma};
  spec.realizations = 2;
  spec.master_seed = 42;
  return spec;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

struct EnvGuard {
  std::string name, old_value;
  bool had = false;
  EnvGuard(const char* n, const char* v) : name(n) {
    if (const char* p = std::getenv(n)) {
      had = true;
      old_value = p;
    }
    setenv(n, v, 1);
  }
  ~EnvGuard() {
    if (had) {
      setenv(name.c_str(), old_value.c_str(), 1);
    } else {
      unsetenv(name.c_str());
    }
  }
};

}  // namespace

TEST_CASE("experiment runs") {
  SUBCASE("one value, one scheme, one realization gives one row") {
    ExperimentSpec spec = tiny_spec();
    spec.values = {30.0};
    spec.schemes = {SchemeId::fpa_2rsma};
    spec.realizations = 1;
    const auto rows = run_experiment(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 1);
    CHECK(rows[0].std_minrate == 0.0);
    CHECK(rows[0].evals_mean == 1.0);
  }

  SUBCASE("all schemes see the same scenario within a realization") {
    ExperimentSpec spec = tiny_spec();
    std::vector<RawRecord> raw;
    run_experiment(spec, &raw);
    std::map<std::pair<int, int>, std::set<std::uint64_t>> digests;
    for (const RawRecord& r : raw) {
      digests[{r.value_index, r.realization}].insert(r.scenario_digest);
    }
    for (const auto& [key, set] : digests) CHECK(set.size() == 1);
    // distinct realizations draw distinct scenarios
    std::set<std::uint64_t> all;
    for (const RawRecord& r : raw) all.insert(r.scenario_digest);
    CHECK(all.size() == 4);  // 2 values x 2 realizations
  }

  SUBCASE("identical master seeds give byte-identical CSV text") {
    const ExperimentSpec spec = tiny_spec();
    const auto rows1 = run_experiment(spec);
    const auto rows2 = run_experiment(spec);
    CHECK(results_to_csv(rows1, false) == results_to_csv(rows2, false));
  }

  SUBCASE("results are independent of the worker pool size") {
    const ExperimentSpec spec = tiny_spec();
    std::string csv1, csv2;
    {
      EnvGuard guard("MARSMA_THREADS", "1");
      csv1 = results_to_csv(run_experiment(spec), false);
    }
    {
      EnvGuard guard("MARSMA_THREADS", "4");
      csv2 = results_to_csv(run_experiment(spec), false);
    }
    CHECK(csv1 == csv2);
  }

  SUBCASE("aggregates match a recomputation from the raw records") {
    ExperimentSpec spec = tiny_spec();
    std::vector<RawRecord> raw;
    const auto rows = run_experiment(spec, &raw);
    for (const ResultRow& row : rows) {
      double sum = 0.0;
      int n = 0;
      for (const RawRecord& r : raw) {
        if (r.sweep_value == row.sweep_value && r.scheme == row.scheme &&
            !r.failed) {
          sum += r.min_rate;
          ++n;
        }
      }
      REQUIRE(n == row.n);
      CHECK(row.mean_minrate == doctest::Approx(sum / n).epsilon(1e-12));
    }
  }

  SUBCASE("specs are validated") {
    ExperimentSpec spec = tiny_spec();
    spec.values = {30.0, 25.0};  // not increasing
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = tiny_spec();
    spec.schemes.clear();
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = tiny_spec();
    spec.realizations = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
}

TEST_CASE("CSV output") {
  SUBCASE("empty rows give a header-only file") {
    const std::string csv = results_to_csv({}, false);
    CHECK(csv ==
          "sweep_axis,sweep_value,scheme,mean_minrate,std_minrate,n,evals_mean,"
          "wall_ms\n");
  }

  SUBCASE("column order and 6-digit formatting") {
    ResultRow row;
    row.axis = SweepAxis::n_users;
    row.sweep_value = 6.0;
    row.scheme = SchemeId::ma_sdma;
    row.mean_minrate = 1.23456789;
    row.std_minrate = 0.000123456789;
    row.n = 20;
    row.evals_mean = 227.0;
    row.wall_ms = 1234.5;
    const std::string csv = results_to_csv({&row, 1}, false);
    CHECK(csv.find("n_users,6,ma_sdma,1.23457,0.000123457,20,227,0\n") !=
          std::string::npos);
    const std::string timed = results_to_csv({&row, 1}, true);
    CHECK(timed.find(",1234.5\n") != std::string::npos);
  }

  SUBCASE("round-trips through a file") {
    ResultRow row;
    row.sweep_value = 30.0;
    row.scheme = SchemeId::fpa_2rsma;
    row.mean_minrate = 2.5;
    row.n = 3;
    const std::string path = "/tmp/marsma_test_rows.csv";
    emit_csv({&row, 1}, path, false);
    const std::string text = read_file(path);
    CHECK(text == results_to_csv({&row, 1}, false));
    std::filesystem::remove(path);
  }
}

TEST_CASE("config files") {
  SUBCASE("keys map onto the spec") {
    const std::string text = R"(
# experiment profile
wavelength = 0.1
n_antennas = 4
n_users = 6
p_max_dbm = 30
noise_power_dbm = -90
path_loss_ref_db = -30
t_max_lambda = 10
d0_lambda = 0.5
particles = 20
iterations = 20
beta = 0.02
penalty = 20
restarts = 2
sweep_axis = p_max_dbm
sweep_values = 20, 25, 30
schemes = proposed_dnppso, fpa_2rsma
realizations = 5
seed = 7
output = /tmp/out.csv
)";
    const ExperimentSpec spec = spec_from_key_values(parse_key_values(text));
    CHECK(spec.base.n_antennas == 4);
    CHECK(spec.base.p_max == doctest::Approx(1.0));
    CHECK(spec.base.noise_power == doctest::Approx(1e-12));
    CHECK(spec.base.path_loss_ref == doctest::Approx(1e-3));
    CHECK(spec.base.t_max == doctest::Approx(1.0));
    CHECK(spec.base.d0 == doctest::Approx(0.05));
    CHECK(spec.pso.particles == 20);
    CHECK(spec.pso.restarts == 2);
    CHECK(spec.axis == SweepAxis::p_max_dbm);
    REQUIRE(spec.values.size() == 3);
    CHECK(spec.values[2] == 30.0);
    REQUIRE(spec.schemes.size() == 2);
    CHECK(spec.schemes[1] == SchemeId::fpa_2rsma);
    CHECK(spec.realizations == 5);
    CHECK(spec.master_seed == 7);
    CHECK(spec.output_path == "/tmp/out.csv");
  }

  SUBCASE("unknown keys and bad values are rejected") {
    ExperimentSpec spec;
    CHECK_THROWS_AS(apply_config_key(spec, "bogus_key", "1"),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_config_key(spec, "n_users", "six"),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_config_key(spec, "schemes", "noma"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_key_values("just a line\n"), std::invalid_argument);
  }
}

TEST_CASE("solution fixtures") {
  GlobalConfig cfg;
  cfg.n_antennas = 2;
  cfg.n_users = 2;
  cfg.n_paths = 2;
  Rng rng(5);
  SolutionFixture fx;
  fx.scenario = sample_scenario(cfg, rng);
  fx.apv.t.resize(2);
  fx.apv.t << 0.1, 0.7;
  fx.clustering = Clustering::from_assignment({0, 0});
  fx.beams = BeamformerSet::zeros(2, 1, 2);
  fx.beams.w_p[0][0] = {0.3, -0.2};
  fx.alloc = RateAllocation::zeros(2);

  const std::string text = fixture_to_json(fx);
  const SolutionFixture back = fixture_from_json(text);
  CHECK(back.apv.t == fx.apv.t);
  CHECK(back.clustering.cluster_of == fx.clustering.cluster_of);
  CHECK(back.beams.w_p[0][0] == fx.beams.w_p[0][0]);
  CHECK(scenario_digest(back.scenario) == scenario_digest(fx.scenario));
  const auto violations = check_full_feasibility(back.apv, back.beams, back.alloc,
                                                 back.clustering, back.scenario);
  CHECK(violations.empty());
}
