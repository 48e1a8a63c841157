// mvrank: multivariate rank-based global two-sample testing for multiple
// clinical endpoints.
//
// Subcommands:
//   lds        emit a point set on [0,1]^d as CSV
//   test       run a global two-sample test on a CSV dataset
//   calibrate  Monte Carlo calibration of the rank-energy threshold
//   simulate   dataset generation and rejection-rate experiments

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "mvrank/baselines.hpp"
#include "mvrank/censored.hpp"
#include "mvrank/core.hpp"
#include "mvrank/datagen.hpp"
#include "mvrank/energytest.hpp"
#include "mvrank/harness.hpp"
#include "mvrank/lds.hpp"

namespace {

constexpr const char* kCachePath = "calib_cache.json";

struct CalibrateSpec {
  int runs = 10000;
  std::uint64_t seed = 0;
  bool requested = false;
};

// "--calibrate runs=N,seed=S"
CalibrateSpec parse_calibrate(const std::string& text) {
  CalibrateSpec spec;
  spec.requested = true;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--calibrate expects runs=N,seed=S");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "runs") spec.runs = std::stoi(value);
    else if (key == "seed") spec.seed = std::stoull(value);
    else throw CLI::ValidationError("--calibrate: unknown key '" + key + "'");
  }
  return spec;
}

int cmd_lds(const std::string& kind_name, int n, int d, std::uint64_t seed,
            std::uint32_t skip) {
  const auto kind = mvrank::lds::seq_kind_from_string(kind_name);
  const auto ps = mvrank::lds::generate(kind, n, d, seed, skip);
  for (int k = 0; k < d; ++k)
    std::cout << (k ? "," : "") << "c" << k + 1;
  std::cout << '\n';
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k)
      std::cout << (k ? "," : "") << mvrank::detail::fmt_double(ps.points(i, k));
    std::cout << '\n';
  }
  return 0;
}

int cmd_test(const std::string& data_path, const std::string& schema,
             const std::string& method_name, double alpha,
             const std::string& sequence, const CalibrateSpec& calibrate,
             bool standardize, int permutations, std::uint64_t perm_seed,
             std::uint64_t point_seed) {
  using namespace mvrank;
  const auto data = parse_dataset(data_path, schema);
  const auto method = harness::method_from_string(method_name);

  TestOutcome outcome;
  if (method == harness::Method::rank_energy) {
    energy::TestOptions opts;
    opts.alpha = alpha;
    opts.kind = lds::seq_kind_from_string(sequence);
    opts.standardize = standardize;
    opts.uniform_seed = point_seed;
    energy::CalibrationCache cache(kCachePath);
    if (calibrate.requested) {
      opts.threshold =
          energy::ThresholdPolicy::calibrate(calibrate.runs, calibrate.seed, &cache);
    } else if (!energy::table_threshold(data.d(), alpha)) {
      std::cerr << "note: no built-in threshold for d=" << data.d()
                << ", alpha=" << alpha
                << "; calibrating with runs=10000, seed=0 (override with "
                   "--calibrate runs=N,seed=S)\n";
      opts.threshold = energy::ThresholdPolicy::calibrate(10000, 0, &cache);
    }
    outcome = data.has_survival() ? censored::test_with_survival(data, opts)
                                  : energy::decide(data, opts);
  } else if (method == harness::Method::obrien) {
    outcome = baselines::obrien_test(data, alpha);
  } else {
    const auto phi = method == harness::Method::wittkowski
                         ? baselines::PhiKind::wittkowski_majority
                         : baselines::PhiKind::finkelstein_schoenfeld;
    outcome = baselines::permutation_test(data, phi, alpha, permutations,
                                          perm_seed);
    outcome.method = harness::to_string(method);
  }
  std::cout << nlohmann::json(outcome).dump(2) << '\n';
  return outcome.reject ? 0 : 0;
}

int cmd_calibrate(Eigen::Index m, Eigen::Index n, Eigen::Index d, double alpha,
                  int runs, std::uint64_t seed, const std::string& kind_name,
                  int workers) {
  using namespace mvrank;
  energy::CalibrationCache cache(kCachePath);
  const auto entry = energy::calibrate_threshold(
      m, n, d, alpha, runs, lds::seq_kind_from_string(kind_name), seed, &cache,
      workers);
  std::cout << nlohmann::json(entry).dump(2) << '\n';
  return 0;
}

int cmd_simulate_gen(int scenario, Eigen::Index m, Eigen::Index n, double r,
                     double rho, std::uint64_t seed, const std::string& out) {
  using namespace mvrank;
  datagen::ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.m = m;
  cfg.n = n;
  cfg.r = r;
  cfg.rho = rho;
  cfg.seed = seed;
  const auto data = datagen::generate(cfg);
  write_dataset(data, out);
  std::cerr << "wrote " << data.m() + data.n() << " rows to " << out
            << " (schema: " << schema_spec_string(data) << ")\n";
  return 0;
}

int cmd_simulate_run(const std::string& spec_path, const std::string& out,
                     int workers) {
  using namespace mvrank;
  std::ifstream in(spec_path);
  if (!in) throw error("cannot open spec file: " + spec_path);
  nlohmann::json j;
  in >> j;
  const auto spec = j.get<harness::ExperimentSpec>();
  energy::CalibrationCache cache(kCachePath);
  const auto records = harness::run_experiment(spec, workers, &cache);
  harness::emit_results(records, out);
  harness::emit_spec(spec, out + ".spec.json");
  std::cerr << "wrote " << records.size() << " records to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multivariate rank-based global two-sample tests"};
  app.require_subcommand(1);

  // --- lds ---
  auto* lds_cmd = app.add_subcommand("lds", "emit a point set as CSV");
  std::string lds_kind = "sobol";
  int lds_n = 128, lds_d = 2;
  std::uint64_t lds_seed = 0;
  std::uint32_t lds_skip = 1;
  lds_cmd->add_option("--kind", lds_kind, "sobol|halton|hammersley|uniform");
  lds_cmd->add_option("--n", lds_n, "number of points")->required();
  lds_cmd->add_option("--d", lds_d, "dimension")->required();
  lds_cmd->add_option("--seed", lds_seed, "seed (uniform kind)");
  lds_cmd->add_option("--skip", lds_skip, "leading points to drop (sobol)");

  // --- test ---
  auto* test_cmd = app.add_subcommand("test", "run a global two-sample test");
  std::string data_path, schema, method = "rank-energy", sequence = "sobol";
  std::string calibrate_text;
  double alpha = 0.05;
  bool standardize = false;
  int permutations = 2000;
  std::uint64_t perm_seed = 0, point_seed = 0;
  test_cmd->add_option("--data", data_path, "CSV dataset")->required();
  test_cmd->add_option("--schema", schema,
                       "endpoint kinds, e.g. 'time=tte,count=disc' "
                       "(unlisted endpoints are continuous)");
  test_cmd->add_option("--method", method, "rank-energy|obrien|wittkowski|fs");
  test_cmd->add_option("--alpha", alpha, "significance level");
  test_cmd->add_option("--sequence", sequence,
                       "rank-energy point set: sobol|halton|hammersley|uniform");
  test_cmd->add_option("--calibrate", calibrate_text,
                       "fresh threshold calibration, 'runs=N,seed=S'");
  test_cmd->add_flag("--standardize", standardize,
                     "standardize endpoints before assignment");
  test_cmd->add_option("--permutations", permutations,
                       "permutation count (wittkowski/fs)");
  test_cmd->add_option("--perm-seed", perm_seed, "permutation seed");
  test_cmd->add_option("--point-seed", point_seed,
                       "seed for the uniform point-set kind");

  // --- calibrate ---
  auto* cal_cmd = app.add_subcommand("calibrate",
                                     "Monte Carlo threshold calibration");
  Eigen::Index cal_m = 200, cal_n = 200, cal_d = 2;
  double cal_alpha = 0.05;
  int cal_runs = 10000, cal_workers = 0;
  std::uint64_t cal_seed = 0;
  std::string cal_kind = "sobol";
  cal_cmd->add_option("--m", cal_m, "arm x size")->required();
  cal_cmd->add_option("--n", cal_n, "arm y size")->required();
  cal_cmd->add_option("--d", cal_d, "dimension")->required();
  cal_cmd->add_option("--alpha", cal_alpha, "significance level")->required();
  cal_cmd->add_option("--runs", cal_runs, "null replicates")->required();
  cal_cmd->add_option("--seed", cal_seed, "seed")->required();
  cal_cmd->add_option("--kind", cal_kind, "point-set kind");
  cal_cmd->add_option("--workers", cal_workers, "threads (0 = all cores)");

  // --- simulate ---
  auto* sim_cmd = app.add_subcommand("simulate",
                                     "scenario generation and experiments");
  sim_cmd->require_subcommand(1);
  auto* gen_cmd = sim_cmd->add_subcommand("gen", "write one generated dataset");
  int gen_scenario = 1;
  Eigen::Index gen_m = 50, gen_n = 50;
  double gen_r = 1.0, gen_rho = 0.3;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen_cmd->add_option("--scenario", gen_scenario, "1|2|3")->required();
  gen_cmd->add_option("--m", gen_m, "arm x size");
  gen_cmd->add_option("--n", gen_n, "arm y size");
  gen_cmd->add_option("--r", gen_r, "effect multiplier")->required();
  gen_cmd->add_option("--rho", gen_rho, "equicorrelation (scenarios 1, 3)");
  gen_cmd->add_option("--seed", gen_seed, "seed")->required();
  gen_cmd->add_option("--out", gen_out, "output CSV")->required();

  auto* run_cmd = sim_cmd->add_subcommand("run", "run an experiment spec");
  std::string run_spec, run_out;
  int run_workers = 0;
  run_cmd->add_option("--spec", run_spec, "experiment spec JSON")->required();
  run_cmd->add_option("--out", run_out, "results CSV")->required();
  run_cmd->add_option("--workers", run_workers, "threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (lds_cmd->parsed())
      return cmd_lds(lds_kind, lds_n, lds_d, lds_seed, lds_skip);
    if (test_cmd->parsed()) {
      CalibrateSpec cal;
      if (!calibrate_text.empty()) cal = parse_calibrate(calibrate_text);
      return cmd_test(data_path, schema, method, alpha, sequence, cal,
                      standardize, permutations, perm_seed, point_seed);
    }
    if (cal_cmd->parsed())
      return cmd_calibrate(cal_m, cal_n, cal_d, cal_alpha, cal_runs, cal_seed,
                           cal_kind, cal_workers);
    if (sim_cmd->parsed()) {
      if (gen_cmd->parsed())
        return cmd_simulate_gen(gen_scenario, gen_m, gen_n, gen_r, gen_rho,
                                gen_seed, gen_out);
      if (run_cmd->parsed())
        return cmd_simulate_run(run_spec, run_out, run_workers);
    }
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
