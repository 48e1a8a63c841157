#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvrank/core.hpp"
#include "mvrank/rankmap.hpp"
#include "mvrank/rng.hpp"

// The rank energy test: energy-distance statistic on empirical
// multivariate ranks, Monte Carlo calibrated rejection thresholds, and the
// accept/reject decision.

namespace mvrank::energy {

/// Energy-distance V-statistic on the rank clouds (Euclidean norm, not
/// squared):
///   (2/mn) sum_ij |Rx_i - Ry_j| - (1/m^2) sum_ij |Rx_i - Rx_j|
///                               - (1/n^2) sum_ij |Ry_i - Ry_j|.
/// Nonnegative for any inputs.
inline double rank_energy_statistic(const Eigen::MatrixXd& ranks_x,
                                    const Eigen::MatrixXd& ranks_y) {
  const Eigen::Index m = ranks_x.rows(), n = ranks_y.rows();
  if (m < 1 || n < 1)
    throw std::invalid_argument("rank_energy_statistic: empty arm");
  double cross = 0.0, within_x = 0.0, within_y = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cross += (ranks_x.row(i) - ranks_y.row(j)).norm();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      within_x += 2.0 * (ranks_x.row(i) - ranks_x.row(j)).norm();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      within_y += 2.0 * (ranks_y.row(i) - ranks_y.row(j)).norm();
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  return 2.0 / (dm * dn) * cross - within_x / (dm * dm) - within_y / (dn * dn);
}

inline double rank_energy_statistic(const ranks::RankAssignment& ra) {
  return rank_energy_statistic(ra.ranks_x, ra.ranks_y);
}

/// The scaling whose null limit is a weighted chi-square series.
inline double scaled_statistic(double re2, Eigen::Index m, Eigen::Index n) {
  return static_cast<double>(m) * static_cast<double>(n) /
         static_cast<double>(m + n) * re2;
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// Published asymptotic thresholds for the scaled statistic, d = 1..6,
/// alpha in {0.05, 0.10}.
inline std::optional<double> table_threshold(Eigen::Index d, double alpha) {
  static constexpr double kAlpha05[6] = {0.94, 1.12, 1.26, 1.37, 1.45, 1.54};
  static constexpr double kAlpha10[6] = {0.70, 0.92, 1.07, 1.17, 1.28, 1.37};
  if (d < 1 || d > 6) return std::nullopt;
  if (alpha == 0.05) return kAlpha05[d - 1];
  if (alpha == 0.10) return kAlpha10[d - 1];
  return std::nullopt;
}

/// One calibrated rejection threshold: the empirical (1-alpha) quantile of
/// `runs` null replicates of the scaled statistic.
struct CalibrationEntry {
  Eigen::Index m = 0, n = 0, d = 0;
  double alpha = 0.0;
  int runs = 0;
  lds::SeqKind kind = lds::SeqKind::sobol;
  std::uint64_t seed = 0;
  double threshold = 0.0;
};

inline void to_json(nlohmann::json& j, const CalibrationEntry& e) {
  j = nlohmann::json{{"m", e.m},       {"n", e.n},
                     {"d", e.d},       {"alpha", e.alpha},
                     {"runs", e.runs}, {"kind", lds::to_string(e.kind)},
                     {"seed", e.seed}, {"threshold", e.threshold}};
}

inline void from_json(const nlohmann::json& j, CalibrationEntry& e) {
  e.m = j.at("m").get<Eigen::Index>();
  e.n = j.at("n").get<Eigen::Index>();
  e.d = j.at("d").get<Eigen::Index>();
  e.alpha = j.at("alpha").get<double>();
  e.runs = j.at("runs").get<int>();
  e.kind = lds::seq_kind_from_string(j.at("kind").get<std::string>());
  e.seed = j.at("seed").get<std::uint64_t>();
  e.threshold = j.at("threshold").get<double>();
}

namespace detail {

inline constexpr std::uint64_t kCalibrationTag = 0xCA11Bu;

/// Scaled statistic of one synthetic null replicate: both arms standard
/// d-variate normal, ranks from the shared point set.
inline double null_replicate(Eigen::Index m, Eigen::Index n, Eigen::Index d,
                             const lds::PointSet& ps, rng::Stream& stream) {
  Eigen::MatrixXd x(m, d), y(n, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = stream.next_gaussian();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < d; ++k) y(j, k) = stream.next_gaussian();
  const auto ra = ranks::empirical_ranks(x, y, ps);
  return scaled_statistic(rank_energy_statistic(ra), m, n);
}

}  // namespace detail

/// Sorted null distribution of the scaled statistic under H0 (both arms
/// standard d-variate normal), `runs` replicates. Replicates run on
/// `workers` threads under per-replicate substreams, so the result does
/// not depend on scheduling. The uniform point-set kind redraws its point
/// set per replicate; the deterministic kinds share one.
inline std::vector<double> null_statistics(Eigen::Index m, Eigen::Index n,
                                           Eigen::Index d, int runs,
                                           lds::SeqKind kind,
                                           std::uint64_t seed,
                                           int workers = 0) {
  if (runs < 100) throw std::invalid_argument("calibration needs runs >= 100");
  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;

  std::optional<lds::PointSet> shared;
  if (kind != lds::SeqKind::uniform) shared = lds::generate(kind, m + n, d);

  std::vector<double> stats(runs);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex failure_mu;
  std::string failure;
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= runs || failed.load()) return;
      try {
        auto stream = rng::Stream::substream(
            seed, {detail::kCalibrationTag, static_cast<std::uint64_t>(i)});
        if (kind == lds::SeqKind::uniform) {
          const auto ps = lds::uniform(m + n, d, stream.next_u64());
          stats[i] = detail::null_replicate(m, n, d, ps, stream);
        } else {
          stats[i] = detail::null_replicate(m, n, d, *shared, stream);
        }
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
    throw error("calibration replicate failed: " + failure);

  std::sort(stats.begin(), stats.end());
  return stats;
}

/// Empirical (1-alpha) quantile: order statistic ceil((1-alpha)*runs),
/// 1-based (inverse-CDF convention), so thresholds are bit-reproducible.
inline double empirical_quantile(const std::vector<double>& sorted,
                                 double alpha) {
  const auto runs = sorted.size();
  std::size_t idx = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(runs)));
  if (idx < 1) idx = 1;
  if (idx > runs) idx = runs;
  return sorted[idx - 1];
}

/// In-memory + file-backed cache of calibration results. The JSON file
/// holds one entry per distinct (m, n, d, alpha, runs, kind, seed).
class CalibrationCache {
 public:
  CalibrationCache() = default;
  explicit CalibrationCache(std::string path) : path_(std::move(path)) {
    load();
  }

  static std::string key(const CalibrationEntry& e) {
    std::ostringstream os;
    os << "m=" << e.m << ";n=" << e.n << ";d=" << e.d << ";alpha=" << e.alpha
       << ";runs=" << e.runs << ";kind=" << lds::to_string(e.kind)
       << ";seed=" << e.seed;
    return os.str();
  }

  std::optional<CalibrationEntry> find(const CalibrationEntry& probe) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key(probe));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const CalibrationEntry& e) {
    std::lock_guard lock(mu_);
    entries_[key(e)] = e;
    if (!path_.empty()) save_locked();
  }

  // Shared sorted null statistics keyed without alpha, so calibrating a
  // second alpha does not redo the simulation.
  std::optional<std::vector<double>> find_nulls(const std::string& k) {
    std::lock_guard lock(mu_);
    auto it = nulls_.find(k);
    if (it == nulls_.end()) return std::nullopt;
    return it->second;
  }
  void insert_nulls(const std::string& k, std::vector<double> v) {
    std::lock_guard lock(mu_);
    nulls_[k] = std::move(v);
  }

  static std::string nulls_key(Eigen::Index m, Eigen::Index n, Eigen::Index d,
                               int runs, lds::SeqKind kind, std::uint64_t seed) {
    std::ostringstream os;
    os << m << ';' << n << ';' << d << ';' << runs << ';'
       << lds::to_string(kind) << ';' << seed;
    return os.str();
  }

 private:
  void load() {
    std::ifstream in(path_);
    if (!in) return;  // cache starts empty
    nlohmann::json j;
    try {
      in >> j;
      for (const auto& item : j.at("entries"))
        entries_[key(item.get<CalibrationEntry>())] = item.get<CalibrationEntry>();
    } catch (const std::exception&) {
      entries_.clear();  // unreadable cache is discarded, not fatal
    }
  }

  void save_locked() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, e] : entries_) arr.push_back(e);
    nlohmann::json j{{"entries", arr}};
    std::ofstream out(path_);
    if (out) out << j.dump(2) << '\n';
  }

  std::string path_;
  std::map<std::string, CalibrationEntry> entries_;
  std::map<std::string, std::vector<double>> nulls_;
  std::mutex mu_;
};

/// Monte Carlo threshold calibration (the empirical quantile of simulated
/// null scaled statistics). Deterministic given the seed; cached when a
/// cache is supplied.
inline CalibrationEntry calibrate_threshold(Eigen::Index m, Eigen::Index n,
                                            Eigen::Index d, double alpha,
                                            int runs, lds::SeqKind kind,
                                            std::uint64_t seed,
                                            CalibrationCache* cache = nullptr,
                                            int workers = 0) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("alpha must lie in (0,1)");
  CalibrationEntry entry{m, n, d, alpha, runs, kind, seed, 0.0};
  if (cache) {
    if (auto hit = cache->find(entry)) return *hit;
  }
  const std::string nk = CalibrationCache::nulls_key(m, n, d, runs, kind, seed);
  std::vector<double> stats;
  if (cache) {
    if (auto hit = cache->find_nulls(nk)) stats = std::move(*hit);
  }
  if (stats.empty()) {
    stats = null_statistics(m, n, d, runs, kind, seed, workers);
    if (cache) cache->insert_nulls(nk, stats);
  }
  entry.threshold = empirical_quantile(stats, alpha);
  if (cache) cache->insert(entry);
  return entry;
}

// ---------------------------------------------------------------------------
// Decision
// ---------------------------------------------------------------------------

/// How decide() obtains its threshold.
struct ThresholdPolicy {
  enum class Source { table, calibrate } source = Source::table;
  // calibration parameters (Source::calibrate)
  int runs = 10000;
  std::uint64_t seed = 0;
  CalibrationCache* cache = nullptr;
  int workers = 0;

  static ThresholdPolicy table() { return {}; }
  static ThresholdPolicy calibrate(int runs, std::uint64_t seed,
                                   CalibrationCache* cache = nullptr,
                                   int workers = 0) {
    ThresholdPolicy p;
    p.source = Source::calibrate;
    p.runs = runs;
    p.seed = seed;
    p.cache = cache;
    p.workers = workers;
    return p;
  }
};

struct TestOptions {
  double alpha = 0.05;
  lds::SeqKind kind = lds::SeqKind::sobol;
  bool standardize = false;
  std::uint32_t sobol_skip = 1;
  std::uint64_t uniform_seed = 0;  // seeds the uniform point-set kind
  ThresholdPolicy threshold = ThresholdPolicy::table();
};

namespace detail {

/// Shared implementation: ranks + statistic + decision on plain numeric
/// arms (any survival preprocessing already applied by the caller).
inline TestOutcome run_rank_energy(const Eigen::MatrixXd& arm_x,
                                   const Eigen::MatrixXd& arm_y,
                                   const TestOptions& opts,
                                   const std::string& method) {
  const Eigen::Index m = arm_x.rows(), n = arm_y.rows(), d = arm_x.cols();

  double threshold = 0.0;
  std::string provenance;
  if (opts.threshold.source == ThresholdPolicy::Source::table) {
    const auto t = table_threshold(d, opts.alpha);
    if (!t)
      throw error(
          "no built-in threshold for d=" + std::to_string(d) + ", alpha=" +
          mvrank::detail::fmt_double(opts.alpha) +
          " (table covers d <= 6, alpha in {0.05, 0.10}); run a fresh "
          "calibration instead");
    threshold = *t;
    provenance = "table";
  } else {
    const auto entry = calibrate_threshold(
        m, n, d, opts.alpha, opts.threshold.runs, opts.kind,
        opts.threshold.seed, opts.threshold.cache, opts.threshold.workers);
    threshold = entry.threshold;
    provenance = "calibration(runs=" + std::to_string(entry.runs) +
                 ",seed=" + std::to_string(entry.seed) + ")";
  }

  Eigen::MatrixXd nx = arm_x, ny = arm_y;
  if (opts.standardize) {
    auto [sx, sy] = ranks::standardize_pooled(arm_x, arm_y);
    nx = std::move(sx);
    ny = std::move(sy);
  }
  const auto ps =
      lds::generate(opts.kind, m + n, d, opts.uniform_seed, opts.sobol_skip);
  const auto ra = ranks::empirical_ranks(nx, ny, ps);
  const double re2 = rank_energy_statistic(ra);
  const double scaled = scaled_statistic(re2, m, n);

  TestOutcome outcome;
  outcome.statistic = re2;
  outcome.scaled_statistic = scaled;
  outcome.threshold = threshold;
  outcome.reject = scaled >= threshold;
  outcome.method = method;
  outcome.alpha = opts.alpha;
  outcome.meta["threshold_source"] = provenance;
  outcome.meta["sequence"] = lds::to_string(opts.kind);
  if (opts.kind == lds::SeqKind::sobol) {
    outcome.meta["sobol_skip"] = std::to_string(opts.sobol_skip);
    outcome.meta["sobol_table"] = ps.table_id;
  }
  if (opts.kind == lds::SeqKind::uniform)
    outcome.meta["point_seed"] = std::to_string(opts.uniform_seed);
  outcome.meta["standardize"] = opts.standardize ? "true" : "false";
  outcome.meta["m"] = std::to_string(m);
  outcome.meta["n"] = std::to_string(n);
  return outcome;
}

}  // namespace detail

/// Rank energy decision for datasets without a survival endpoint
/// (survival datasets go through censored::test_with_survival, which
/// performs the Gehan substitution first).
inline TestOutcome decide(const TwoSampleData& data, const TestOptions& opts) {
  validate(data);
  if (data.has_survival())
    throw error(
        "decide() handles non-survival endpoints only; use "
        "test_with_survival for a time-to-event endpoint");
  return detail::run_rank_energy(data.arm_x, data.arm_y, opts, "rank-energy");
}

}  // namespace mvrank::energy

namespace mvrank {

// ADL hook for nlohmann::json.
inline void to_json(nlohmann::json& j, const TestOutcome& o) {
  j = nlohmann::json{{"method", o.method},       {"alpha", o.alpha},
                     {"statistic", o.statistic}, {"threshold", o.threshold},
                     {"reject", o.reject}};
  if (o.scaled_statistic) j["scaled_statistic"] = *o.scaled_statistic;
  if (o.p_value) j["p_value"] = *o.p_value;
  j["meta"] = o.meta;
}

}  // namespace mvrank
