#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvrank/harness.hpp"

using namespace mvrank;
using namespace mvrank::harness;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.scenario = 1;
  spec.m = 12;
  spec.n = 12;
  spec.r_grid = {1.0, 2.5};
  spec.rho_values = {0.3};
  spec.methods = {Method::rank_energy, Method::obrien};
  spec.replications = 24;
  spec.alpha = 0.05;
  spec.master_seed = 99;
  spec.calibration_runs = 300;
  spec.calibration_seed = 7;
  spec.permutations = 99;
  return spec;
}

}  // namespace

TEST_CASE("experiment output is independent of worker count") {
  const auto spec = small_spec();
  const auto one = run_experiment(spec, 1);
  const auto two = run_experiment(spec, 2);
  REQUIRE(one.size() == two.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    REQUIRE(one[i].method == two[i].method);
    REQUIRE(one[i].rejections == two[i].rejections);
    REQUIRE(one[i].rate == two[i].rate);
  }

  std::ostringstream a, b;
  emit_results(one, a);
  emit_results(two, b);
  REQUIRE(a.str() == b.str());
}

TEST_CASE("rate is exactly rejections over replications") {
  auto spec = small_spec();
  spec.replications = 7;
  spec.methods = {Method::rank_energy};
  spec.r_grid = {3.0};  // strong effect, rejections all but guaranteed
  const auto records = run_experiment(spec, 2);
  REQUIRE(records.size() == 1);
  REQUIRE(records[0].rate ==
          static_cast<double>(records[0].rejections) / 7.0);
  REQUIRE(records[0].replications == 7);
}

TEST_CASE("records are sorted and one row each in the CSV") {
  const auto spec = small_spec();
  const auto records = run_experiment(spec, 2);
  // 2 methods x 1 rho x 2 r values
  REQUIRE(records.size() == 4);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto key = [](const RejectionRecord& x) {
      return std::tie(x.method, x.sequence, x.rho, x.r);
    };
    REQUIRE(key(records[i - 1]) < key(records[i]));
  }

  std::ostringstream out;
  emit_results(records, out);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  REQUIRE(lines == 5);  // header + 4 rows
}

TEST_CASE("single record emits a two-line CSV, re-emission is identical") {
  RejectionRecord rec;
  rec.scenario = 1;
  rec.method = "rank-energy";
  rec.sequence = "sobol";
  rec.r = 1.0;
  rec.rho = 0.3;
  rec.m = 50;
  rec.n = 50;
  rec.replications = 1;
  rec.rejections = 1;
  rec.rate = 1.0;
  std::ostringstream a, b;
  emit_results({rec}, a);
  emit_results({rec}, b);
  const std::string csv = a.str();
  REQUIRE(csv == b.str());
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("spec JSON round trip") {
  auto spec = small_spec();
  spec.kinds = {lds::SeqKind::sobol, lds::SeqKind::uniform};
  spec.threshold_mode = ThresholdMode::table;
  nlohmann::json j = spec;
  const auto back = j.get<ExperimentSpec>();
  REQUIRE(back.scenario == spec.scenario);
  REQUIRE(back.r_grid == spec.r_grid);
  REQUIRE(back.methods == spec.methods);
  REQUIRE(back.kinds == spec.kinds);
  REQUIRE(back.threshold_mode == spec.threshold_mode);
  REQUIRE(back.calibration_runs == spec.calibration_runs);
  REQUIRE(back.master_seed == spec.master_seed);
}

TEST_CASE("spec validation rejects nonsense") {
  auto spec = small_spec();
  spec.r_grid.clear();
  REQUIRE_THROWS_AS(run_experiment(spec, 1), error);
  spec = small_spec();
  spec.replications = 0;
  REQUIRE_THROWS_AS(run_experiment(spec, 1), error);
  spec = small_spec();
  spec.methods.clear();
  REQUIRE_THROWS_AS(run_experiment(spec, 1), error);
}

TEST_CASE("sensitivity experiment pins its design") {
  auto spec = small_spec();
  spec.replications = 8;
  spec.r_grid = {1.0};
  spec.calibration_runs = 200;
  const auto records = sensitivity_experiment(spec, 2);
  REQUIRE(records.size() == 4);  // four sequence kinds
  for (const auto& rec : records) {
    REQUIRE(rec.scenario == 1);
    REQUIRE(rec.rho == 0.8);
    REQUIRE(rec.method == std::string("rank-energy"));
  }
}

TEST_CASE("rank-energy power is monotone in r up to Monte Carlo noise") {
  ExperimentSpec spec;
  spec.scenario = 1;
  spec.m = spec.n = 25;
  spec.r_grid = {1.0, 1.5, 2.0, 2.5, 3.0};
  spec.rho_values = {0.3};
  spec.methods = {Method::rank_energy};
  spec.replications = 400;
  spec.master_seed = 515;
  spec.calibration_runs = 2000;
  spec.calibration_seed = 3;
  const auto records = run_experiment(spec, 2);
  REQUIRE(records.size() == 5);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double prev = records[i - 1].rate, cur = records[i].rate;
    const double se = std::sqrt(std::max(prev * (1 - prev), 1e-4) /
                                spec.replications);
    REQUIRE(cur >= prev - 2.0 * se);
  }
  // and it actually climbs
  REQUIRE(records.back().rate > records.front().rate + 0.3);
}

TEST_CASE("baselines see the same datasets as rank-energy") {
  // a cell with m=n and identical arms distribution: decisions may differ,
  // but the record layout pairs methods on shared data; spot-check the
  // determinism of the pairing by rerunning
  const auto spec = small_spec();
  const auto a = run_experiment(spec, 2);
  const auto b = run_experiment(spec, 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    REQUIRE(a[i].rejections == b[i].rejections);
}
