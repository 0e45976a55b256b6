#pragma once

#include <map>
#include <string>

#include "marsma/parallel.hpp"
#include "marsma/schemes.hpp"

namespace marsma {

enum class SweepAxis { n_users, p_max_dbm, n_antennas, max_distance };

const char* sweep_axis_name(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

// One Monte-Carlo experiment: a sweep over one axis, a scheme list, and a
// number of paired channel realizations per sweep value.
struct ExperimentSpec {
  GlobalConfig base;
  PsoConfig pso;
  InnerOptions inner;
  SweepAxis axis = SweepAxis::p_max_dbm;
  std::vector<double> values;
  std::vector<SchemeId> schemes;
  int realizations = 20;
  std::uint64_t master_seed = 1;
  std::string output_path;
  std::string raw_dump_path;  // optional per-realization record file
  bool timing_in_csv = false; // measured wall time breaks byte-reproducibility

  void validate() const;
};

GlobalConfig config_for_sweep_value(const GlobalConfig& base, SweepAxis axis,
                                    double value);

struct ResultRow {
  SweepAxis axis = SweepAxis::p_max_dbm;
  double sweep_value = 0.0;
  SchemeId scheme = SchemeId::proposed_dnppso;
  double mean_minrate = 0.0;
  double std_minrate = 0.0;
  int n = 0;  // successful realizations
  double evals_mean = 0.0;
  double wall_ms = 0.0;
};

struct RawRecord {
  int value_index = 0;
  double sweep_value = 0.0;
  int realization = 0;
  SchemeId scheme = SchemeId::proposed_dnppso;
  double min_rate = 0.0;
  long long evals = 0;
  std::uint64_t scenario_digest = 0;
  bool failed = false;
};

// Runs every (sweep value, realization, scheme) cell: one scenario per
// (value, realization) pair shared by all schemes, per-task seeds derived
// from the master seed and indices only. Failed cells are recorded and
// excluded from the aggregates; the run continues.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      std::vector<RawRecord>* raw = nullptr);

// CSV with the fixed header
// sweep_axis,sweep_value,scheme,mean_minrate,std_minrate,n,evals_mean,wall_ms
// and 6-significant-digit decimals. Unless include_timing is set, wall_ms is
// written as 0 so identical seeds give byte-identical files.
std::string results_to_csv(std::span<const ResultRow> rows, bool include_timing);
void emit_csv(std::span<const ResultRow> rows, const std::string& path,
              bool include_timing);

void write_raw_dump(std::span<const RawRecord> records, const std::string& path);

// Flat key = value config file ('#' comments). Keys mirror the config field
// names; *_dbm / *_db variants take decibel inputs.
std::map<std::string, std::string> load_key_values(const std::string& path);
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Applies one key to the spec; throws std::invalid_argument on unknown keys
// or unparsable values.
void apply_config_key(ExperimentSpec& spec, const std::string& key,
                      const std::string& value);

ExperimentSpec spec_from_key_values(const std::map<std::string, std::string>& kv);

// Solution fixture: everything check_full_feasibility needs, as one JSON
// document.
struct SolutionFixture {
  Scenario scenario;
  Apv apv;
  Clustering clustering;
  BeamformerSet beams;
  RateAllocation alloc;
};

std::string fixture_to_json(const SolutionFixture& fx);
SolutionFixture fixture_from_json(const std::string& text);

}  // namespace marsma
