#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvrank/baselines.hpp"
#include "mvrank/censored.hpp"
#include "mvrank/core.hpp"
#include "mvrank/datagen.hpp"
#include "mvrank/energytest.hpp"

// Simulation driver: empirical rejection-rate grids over scenarios,
// methods, and point-set kinds, reproducible independent of worker count.
//
// Substream layout: dataset generation for a grid cell replicate is keyed
// by (master_seed, scenario, r, rho, replicate) only, so every method and
// sequence kind sees the same data within a grid point (paired
// comparisons); method-level randomness (permutation draws, uniform point
// sets) additionally keys on the method or kind.

namespace mvrank::harness {

enum class Method { rank_energy, obrien, wittkowski, fs };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::rank_energy: return "rank-energy";
    case Method::obrien: return "obrien";
    case Method::wittkowski: return "wittkowski";
    case Method::fs: return "fs";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "rank-energy") return Method::rank_energy;
  if (s == "obrien") return Method::obrien;
  if (s == "wittkowski") return Method::wittkowski;
  if (s == "fs") return Method::fs;
  throw error("unknown method: '" + s +
              "' (expected rank-energy|obrien|wittkowski|fs)");
}

/// How the rank-energy threshold is obtained for each cell.
enum class ThresholdMode {
  calibrate,  // Monte Carlo calibration at the cell's (m, n, d, kind)
  table,      // built-in asymptotic table (d <= 6, alpha in {0.05, 0.10})
};

struct ExperimentSpec {
  int scenario = 1;
  Eigen::Index m = 50, n = 50;
  std::vector<double> r_grid;
  std::vector<double> rho_values;       // scenarios 1 and 3; {0} for scenario 2
  std::vector<Method> methods{Method::rank_energy};
  std::vector<lds::SeqKind> kinds{lds::SeqKind::sobol};  // rank-energy only
  int replications = 1000;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;
  ThresholdMode threshold_mode = ThresholdMode::calibrate;
  int calibration_runs = 10000;
  std::uint64_t calibration_seed = 0;
  int permutations = 2000;  // baseline inference
  bool standardize = false;
};

struct RejectionRecord {
  int scenario = 0;
  std::string method;
  std::string sequence;  // point-set kind ("-" for baselines)
  double r = 0.0;
  double rho = 0.0;
  Eigen::Index m = 0, n = 0;
  int replications = 0;
  int rejections = 0;
  double rate = 0.0;
  double wall_time = 0.0;  // seconds; diagnostic only, never serialized
};

inline void to_json(nlohmann::json& j, const ExperimentSpec& spec) {
  std::vector<std::string> methods, kinds;
  for (auto m : spec.methods) methods.push_back(to_string(m));
  for (auto k : spec.kinds) kinds.push_back(lds::to_string(k));
  j = nlohmann::json{
      {"scenario", spec.scenario},
      {"m", spec.m},
      {"n", spec.n},
      {"r_grid", spec.r_grid},
      {"rho_values", spec.rho_values},
      {"methods", methods},
      {"kinds", kinds},
      {"replications", spec.replications},
      {"alpha", spec.alpha},
      {"master_seed", spec.master_seed},
      {"threshold_mode",
       spec.threshold_mode == ThresholdMode::calibrate ? "calibrate" : "table"},
      {"calibration_runs", spec.calibration_runs},
      {"calibration_seed", spec.calibration_seed},
      {"permutations", spec.permutations},
      {"standardize", spec.standardize}};
}

inline void from_json(const nlohmann::json& j, ExperimentSpec& spec) {
  spec.scenario = j.at("scenario").get<int>();
  spec.m = j.at("m").get<Eigen::Index>();
  spec.n = j.at("n").get<Eigen::Index>();
  spec.r_grid = j.at("r_grid").get<std::vector<double>>();
  spec.rho_values = j.value("rho_values", std::vector<double>{0.0});
  spec.methods.clear();
  for (const auto& s : j.at("methods"))
    spec.methods.push_back(method_from_string(s.get<std::string>()));
  spec.kinds.clear();
  for (const auto& s : j.value("kinds", std::vector<std::string>{"sobol"}))
    spec.kinds.push_back(lds::seq_kind_from_string(s));
  spec.replications = j.at("replications").get<int>();
  spec.alpha = j.value("alpha", 0.05);
  spec.master_seed = j.value("master_seed", std::uint64_t{0});
  const std::string mode = j.value("threshold_mode", std::string("calibrate"));
  if (mode == "calibrate") spec.threshold_mode = ThresholdMode::calibrate;
  else if (mode == "table") spec.threshold_mode = ThresholdMode::table;
  else throw error("unknown threshold_mode: '" + mode + "'");
  spec.calibration_runs = j.value("calibration_runs", 10000);
  spec.calibration_seed = j.value("calibration_seed", std::uint64_t{0});
  spec.permutations = j.value("permutations", 2000);
  spec.standardize = j.value("standardize", false);
}

namespace detail {

inline void validate_spec(const ExperimentSpec& spec) {
  if (spec.scenario < 1 || spec.scenario > 3)
    throw error("scenario must be 1, 2, or 3");
  if (spec.replications < 1) throw error("replications must be >= 1");
  if (spec.r_grid.empty()) throw error("r grid must be non-empty");
  if (spec.methods.empty()) throw error("methods must be non-empty");
  if (spec.kinds.empty()) throw error("kinds must be non-empty");
  if (spec.alpha <= 0.0 || spec.alpha >= 1.0)
    throw error("alpha must lie in (0,1)");
}

inline Eigen::Index scenario_dim(int scenario) {
  switch (scenario) {
    case 1: return 8;
    case 2: return 4;
    default: return 6;
  }
}

inline constexpr std::uint64_t kDataTag = 0xDA7A5EEDu;
inline constexpr std::uint64_t kMethodTag = 0x7E57u;

/// One (method, kind) column within a grid cell.
struct Column {
  Method method;
  lds::SeqKind kind;       // meaningful for rank-energy only
  double threshold = 0.0;  // rank-energy only
};

/// Decision of one method column on one replicate dataset.
inline bool run_column(const Column& col, const TwoSampleData& data,
                       const ExperimentSpec& spec, std::uint64_t data_seed) {
  switch (col.method) {
    case Method::rank_energy: {
      const Eigen::Index m = data.m(), n = data.n();
      auto [nx, ny] = data.has_survival()
                          ? censored::substitute_gehan(data)
                          : std::pair{data.arm_x, data.arm_y};
      if (spec.standardize) {
        auto [sx, sy] = ranks::standardize_pooled(nx, ny);
        nx = std::move(sx);
        ny = std::move(sy);
      }
      std::uint64_t point_seed = 0;
      if (col.kind == lds::SeqKind::uniform) {
        auto ss = rng::Stream::substream(
            spec.master_seed,
            {kMethodTag, static_cast<std::uint64_t>(col.method),
             static_cast<std::uint64_t>(col.kind), data_seed});
        point_seed = ss.next_u64();
      }
      const auto ps = lds::generate(col.kind, m + n, data.d(), point_seed);
      const auto ra = ranks::empirical_ranks(nx, ny, ps);
      const double scaled = energy::scaled_statistic(
          energy::rank_energy_statistic(ra), m, n);
      return scaled >= col.threshold;
    }
    case Method::obrien:
      return baselines::obrien_test(data, spec.alpha).reject;
    case Method::wittkowski:
    case Method::fs: {
      auto ss = rng::Stream::substream(
          spec.master_seed, {kMethodTag,
                             static_cast<std::uint64_t>(col.method), data_seed});
      const auto phi = col.method == Method::wittkowski
                           ? baselines::PhiKind::wittkowski_majority
                           : baselines::PhiKind::finkelstein_schoenfeld;
      return baselines::permutation_test(data, phi, spec.alpha,
                                         spec.permutations, ss.next_u64())
          .reject;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

/// Runs the full grid: for every (rho, r) cell, `replications` datasets are
/// generated and every requested method (and, for rank-energy, every
/// sequence kind) decides on the same datasets. Deterministic given the
/// spec, independent of `workers`.
inline std::vector<RejectionRecord> run_experiment(const ExperimentSpec& spec,
                                                   int workers = 0,
                                                   energy::CalibrationCache*
                                                       cache = nullptr) {
  detail::validate_spec(spec);
  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  const Eigen::Index d = detail::scenario_dim(spec.scenario);

  // Column layout: rank-energy gets one column per sequence kind, the
  // baselines one column each.
  std::vector<detail::Column> columns;
  for (Method method : spec.methods) {
    if (method == Method::rank_energy) {
      for (auto kind : spec.kinds) columns.push_back({method, kind, 0.0});
    } else {
      columns.push_back({method, lds::SeqKind::sobol, 0.0});
    }
  }

  // Thresholds first (parallel inside); cached across cells.
  energy::CalibrationCache local_cache;
  energy::CalibrationCache* the_cache = cache ? cache : &local_cache;
  for (auto& col : columns) {
    if (col.method != Method::rank_energy) continue;
    if (spec.threshold_mode == ThresholdMode::table) {
      const auto t = energy::table_threshold(d, spec.alpha);
      if (!t)
        throw error("threshold table does not cover d=" + std::to_string(d) +
                    "; use threshold_mode=calibrate");
      col.threshold = *t;
    } else {
      col.threshold =
          energy::calibrate_threshold(spec.m, spec.n, d, spec.alpha,
                                      spec.calibration_runs, col.kind,
                                      spec.calibration_seed, the_cache, workers)
              .threshold;
    }
  }

  std::vector<RejectionRecord> records;
  const std::vector<double> rhos =
      spec.rho_values.empty() ? std::vector<double>{0.0} : spec.rho_values;
  for (double rho : rhos) {
    for (double r : spec.r_grid) {
      const auto cell_start = std::chrono::steady_clock::now();
      // decisions[replicate * columns + column]
      std::vector<std::uint8_t> decisions(
          static_cast<std::size_t>(spec.replications) * columns.size(), 0);
      std::atomic<int> next{0};
      std::atomic<bool> failed{false};
      std::string failure;
      std::mutex failure_mu;

      auto work = [&]() {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= spec.replications || failed.load()) return;
          try {
            auto ss = rng::Stream::substream(
                spec.master_seed,
                {detail::kDataTag, static_cast<std::uint64_t>(spec.scenario),
                 rng::tag(r), rng::tag(rho), static_cast<std::uint64_t>(rep)});
            datagen::ScenarioConfig cfg;
            cfg.scenario = spec.scenario;
            cfg.m = spec.m;
            cfg.n = spec.n;
            cfg.r = r;
            cfg.rho = rho;
            cfg.seed = ss.next_u64();
            const auto data = datagen::generate(cfg);
            for (std::size_t c = 0; c < columns.size(); ++c)
              decisions[static_cast<std::size_t>(rep) * columns.size() + c] =
                  detail::run_column(columns[c], data, spec, cfg.seed);
          } catch (const std::exception& e) {
            std::lock_guard lock(failure_mu);
            failure = e.what();
            failed.store(true);
            return;
          }
        }
      };
      std::vector<std::thread> pool;
      for (int w = 1; w < workers; ++w) pool.emplace_back(work);
      work();
      for (auto& t : pool) t.join();
      if (failed.load())
        throw error("replicate failed in cell (r=" + std::to_string(r) +
                    ", rho=" + std::to_string(rho) + "): " + failure);

      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        cell_start)
              .count();
      for (std::size_t c = 0; c < columns.size(); ++c) {
        RejectionRecord rec;
        rec.scenario = spec.scenario;
        rec.method = to_string(columns[c].method);
        rec.sequence = columns[c].method == Method::rank_energy
                           ? lds::to_string(columns[c].kind)
                           : "-";
        rec.r = r;
        rec.rho = rho;
        rec.m = spec.m;
        rec.n = spec.n;
        rec.replications = spec.replications;
        for (int rep = 0; rep < spec.replications; ++rep)
          rec.rejections +=
              decisions[static_cast<std::size_t>(rep) * columns.size() + c];
        rec.rate = static_cast<double>(rec.rejections) /
                   static_cast<double>(rec.replications);
        rec.wall_time = elapsed;
        records.push_back(std::move(rec));
      }
    }
  }

  std::sort(records.begin(), records.end(),
            [](const RejectionRecord& a, const RejectionRecord& b) {
              return std::tie(a.scenario, a.method, a.sequence, a.rho, a.r) <
                     std::tie(b.scenario, b.method, b.sequence, b.rho, b.r);
            });
  return records;
}

/// The sequence-kind sensitivity study: scenario 1, rho = 0.8, rank-energy
/// under all four point-set kinds on shared datasets.
inline std::vector<RejectionRecord> sensitivity_experiment(
    ExperimentSpec spec, int workers = 0,
    energy::CalibrationCache* cache = nullptr) {
  spec.scenario = 1;
  spec.rho_values = {0.8};
  spec.methods = {Method::rank_energy};
  spec.kinds = {lds::SeqKind::uniform, lds::SeqKind::hammersley,
                lds::SeqKind::halton, lds::SeqKind::sobol};
  return run_experiment(spec, workers, cache);
}

/// CSV emission, one row per record, stable column order. Re-emitting the
/// same records yields a byte-identical file (wall time is deliberately
/// not serialized).
inline void emit_results(const std::vector<RejectionRecord>& records,
                         std::ostream& out) {
  if (records.empty()) throw error("emit_results: no records");
  out << "scenario,method,sequence,m,n,rho,r,replications,rejections,rate\n";
  for (const auto& rec : records) {
    out << rec.scenario << ',' << rec.method << ',' << rec.sequence << ','
        << rec.m << ',' << rec.n << ',' << mvrank::detail::fmt_double(rec.rho)
        << ',' << mvrank::detail::fmt_double(rec.r) << ','
        << rec.replications << ',' << rec.rejections << ','
        << mvrank::detail::fmt_double(rec.rate) << '\n';
  }
}

inline void emit_results(const std::vector<RejectionRecord>& records,
                         const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw error("cannot open results file: " + csv_path);
  emit_results(records, out);
}

/// Companion provenance file: the full spec as JSON next to the CSV.
inline void emit_spec(const ExperimentSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot open spec file: " + path);
  out << nlohmann::json(spec).dump(2) << '\n';
}

}  // namespace mvrank::harness
