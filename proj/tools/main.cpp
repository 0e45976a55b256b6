// Command line front end: single-scheme runs, Monte-Carlo sweeps, solution
// validation, and outer-loop convergence traces.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "marsma/dnppso.hpp"
#include "marsma/harness.hpp"
#include "marsma/schemes.hpp"
#include "marsma/units.hpp"

namespace {

using namespace marsma;

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs
  std::optional<std::uint64_t> seed;
};

// Builds a spec from (config file, --set overrides, --seed), in that order.
ExperimentSpec build_spec(const CommonArgs& args) {
  ExperimentSpec spec;
  if (!args.config_path.empty()) {
    for (const auto& [key, value] : load_key_values(args.config_path)) {
      apply_config_key(spec, key, value);
    }
  }
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    }
    apply_config_key(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed) {
    spec.master_seed = *args.seed;
    spec.pso.seed = *args.seed;
  }
  return spec;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path,
                  "flat key = value config file");
  cmd->add_option("--set", args.overrides,
                  "override any config key (key=value, repeatable)");
  cmd->add_option("--seed", args.seed, "master seed")->required();
}

int cmd_run(const CommonArgs& args, const std::string& scheme_name_arg,
            const std::string& dump_path) {
  const auto id = parse_scheme(scheme_name_arg);
  if (!id) {
    std::cerr << "unknown scheme: " << scheme_name_arg << "\n";
    return kExitUsage;
  }
  ExperimentSpec spec = build_spec(args);
  spec.base.validate();
  spec.pso.validate();

  Rng rng(derive_seed(spec.master_seed, {0xA0, 0, 0}));
  const Scenario scenario = sample_scenario(spec.base, rng);
  PsoConfig pso = spec.pso;
  pso.seed = derive_seed(spec.master_seed, {0xB0, 0, 0, 0});
  const SchemeResult res = run_scheme(*id, scenario, pso, spec.inner);

  const auto violations = check_full_feasibility(
      res.apv, res.inner.beams, res.inner.alloc, res.inner.clustering, scenario);

  std::printf("scheme: %s\n", scheme_name(*id));
  std::printf("seed: %llu\n", static_cast<unsigned long long>(spec.master_seed));
  std::printf("min_rate: %.6f\n", res.min_rate);
  std::printf("relaxation_z: %.6f\n", res.inner.relaxation_z);
  std::printf("inner_evaluations: %lld\n", res.inner_evaluations);
  std::printf("sca_iterations: %d\n", res.inner.sca_iterations);
  std::ostringstream apv_text;
  for (int m = 0; m < res.apv.t.size(); ++m) {
    apv_text << (m ? " " : "") << res.apv.t[m];
  }
  std::printf("apv: %s\n", apv_text.str().c_str());
  double worst_ratio = 0.0;
  for (double r : res.inner.rank_ratios) worst_ratio = std::max(worst_ratio, r);
  std::printf("max_rank_ratio: %.3e\n", worst_ratio);
  std::printf("violations: %zu\n", violations.size());

  if (!dump_path.empty()) {
    SolutionFixture fx{scenario, res.apv, res.inner.clustering, res.inner.beams,
                       res.inner.alloc};
    std::ofstream os(dump_path);
    if (!os) throw std::runtime_error("cannot open " + dump_path);
    os << fixture_to_json(fx);
    std::printf("solution_dump: %s\n", dump_path.c_str());
  }
  return violations.empty() ? kExitOk : kExitValidationFailure;
}

int cmd_sweep(const CommonArgs& args, const std::string& output_arg,
              bool timing) {
  ExperimentSpec spec = build_spec(args);
  if (!output_arg.empty()) spec.output_path = output_arg;
  if (timing) spec.timing_in_csv = true;
  if (spec.output_path.empty()) {
    std::cerr << "sweep needs an output path (--output or output= in config)\n";
    return kExitUsage;
  }
  spec.validate();

  std::vector<RawRecord> raw;
  const auto rows =
      run_experiment(spec, spec.raw_dump_path.empty() ? nullptr : &raw);
  emit_csv(rows, spec.output_path, spec.timing_in_csv);
  if (!spec.raw_dump_path.empty()) write_raw_dump(raw, spec.raw_dump_path);

  int failed = 0;
  for (const ResultRow& row : rows) failed += row.n < spec.realizations ? 1 : 0;
  std::printf("wrote %s (%zu rows%s)\n", spec.output_path.c_str(), rows.size(),
              failed ? ", with failed cells" : "");
  return kExitOk;
}

int cmd_validate(const std::string& input_path) {
  std::ifstream is(input_path);
  if (!is) {
    std::cerr << "cannot open " << input_path << "\n";
    return kExitUsage;
  }
  std::stringstream buf;
  buf << is.rdbuf();
  const SolutionFixture fx = fixture_from_json(buf.str());
  const auto violations = check_full_feasibility(fx.apv, fx.beams, fx.alloc,
                                                 fx.clustering, fx.scenario);
  if (violations.empty()) {
    std::printf("feasible\n");
    return kExitOk;
  }
  for (const Violation& v : violations) {
    std::printf("violation: %s magnitude=%.3e %s\n", v.constraint.c_str(),
                v.magnitude, v.detail.c_str());
  }
  return kExitValidationFailure;
}

int cmd_trace(const CommonArgs& args, const std::string& scheme_name_arg,
              const std::string& output_path) {
  const auto id = parse_scheme(scheme_name_arg);
  if (!id || !scheme_uses_outer_loop(*id)) {
    std::cerr << "trace needs an outer-loop scheme, got: " << scheme_name_arg
              << "\n";
    return kExitUsage;
  }
  ExperimentSpec spec = build_spec(args);
  spec.base.validate();
  spec.pso.validate();

  Rng rng(derive_seed(spec.master_seed, {0xA0, 0, 0}));
  const Scenario scenario = sample_scenario(spec.base, rng);
  PsoConfig pso = spec.pso;
  pso.seed = derive_seed(spec.master_seed, {0xB0, 0, 0, 0});
  pso.restarts = 1;  // a trace follows a single swarm
  if (*id == SchemeId::classic_pso) pso.prune_enabled = false;
  InnerOptions inner = spec.inner;
  inner.cluster_seed = derive_seed(pso.seed, {0xC1});
  switch (*id) {
    case SchemeId::ma2_kmeans: inner.clustering = ClusteringKind::kmeans; break;
    case SchemeId::ma2_random: inner.clustering = ClusteringKind::random; break;
    case SchemeId::ma_1rsma: inner.mode = LayerMode::one_layer; break;
    case SchemeId::ma_sdma: inner.mode = LayerMode::sdma; break;
    default: break;
  }
  const OuterResult res = run_outer(scenario, pso, inner);
  write_trace_csv(res.trace, output_path);
  std::printf("wrote %s (%zu rows), best fitness %.6f, evaluations %lld\n",
              output_path.c_str(), res.trace.size(), res.best_fitness,
              res.evaluations);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"movable-antenna two-layer RSMA max-min fairness toolkit"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, trace_args;
  std::string run_scheme_name = "proposed_dnppso";
  std::string run_dump_path;
  std::string sweep_output;
  bool sweep_timing = false;
  std::string validate_input;
  std::string trace_scheme_name = "proposed_dnppso";
  std::string trace_output = "trace.csv";

  CLI::App* run =
      app.add_subcommand("run", "run one scheme on one sampled scenario");
  add_common(run, run_args);
  run->add_option("--scheme", run_scheme_name, "scheme id");
  run->add_option("--dump-solution", run_dump_path,
                  "write the solution fixture as JSON");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "run a Monte-Carlo sweep and write the results CSV");
  add_common(sweep, sweep_args);
  sweep->add_option("-o,--output", sweep_output, "output CSV path");
  sweep->add_flag("--timing", sweep_timing,
                  "include measured wall time in the CSV (breaks byte-level "
                  "reproducibility)");

  CLI::App* validate = app.add_subcommand(
      "validate", "check a solution fixture against all constraints");
  validate->add_option("-i,--input", validate_input, "fixture JSON path")
      ->required();

  CLI::App* trace = app.add_subcommand(
      "trace", "run one outer-loop search and write its convergence CSV");
  add_common(trace, trace_args);
  trace->add_option("--scheme", trace_scheme_name, "outer-loop scheme id");
  trace->add_option("-o,--output", trace_output, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage or errors
    return e.get_name() == "CallForHelp" ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_args, run_scheme_name, run_dump_path);
    if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_output, sweep_timing);
    if (validate->parsed()) return cmd_validate(validate_input);
    if (trace->parsed()) {
      return cmd_trace(trace_args, trace_scheme_name, trace_output);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidationFailure;
  }
  return kExitUsage;
}
