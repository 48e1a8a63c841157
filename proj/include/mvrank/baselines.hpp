#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvrank/censored.hpp"
#include "mvrank/core.hpp"
#include "mvrank/rng.hpp"

// Comparator global tests built on per-endpoint pairwise rank scores:
// O'Brien's rank-sum procedure, Wittkowski's two scoring variants, and the
// Finkelstein-Schoenfeld hierarchical score, with permutation inference
// for the U-statistic family.

namespace mvrank::baselines {

/// Score maps from the per-endpoint comparison vector to a scalar.
enum class PhiKind {
  obrien_sum,              // sum of componentwise signs (optionally weighted)
  wittkowski_all,          // 1(max r > 0) - 1(min r < 0)
  wittkowski_majority,     // sign of the component sum
  finkelstein_schoenfeld,  // first nonzero component, scanned in order
};

inline const char* to_string(PhiKind k) {
  switch (k) {
    case PhiKind::obrien_sum: return "obrien_sum";
    case PhiKind::wittkowski_all: return "wittkowski_all";
    case PhiKind::wittkowski_majority: return "wittkowski_majority";
    case PhiKind::finkelstein_schoenfeld: return "finkelstein_schoenfeld";
  }
  return "?";
}

inline PhiKind phi_from_string(const std::string& s) {
  if (s == "obrien_sum") return PhiKind::obrien_sum;
  if (s == "wittkowski_all") return PhiKind::wittkowski_all;
  if (s == "wittkowski_majority") return PhiKind::wittkowski_majority;
  if (s == "finkelstein_schoenfeld") return PhiKind::finkelstein_schoenfeld;
  throw error("unknown phi map: '" + s + "'");
}

/// Componentwise comparison of one (x_i, y_j) pair: sign(x_k - y_k) per
/// endpoint, with a survival endpoint (index 0 with indicators) compared
/// by the Gehan rule instead.
inline std::vector<int> pair_scores(const Eigen::VectorXd& x_i,
                                    const Eigen::VectorXd& y_j,
                                    std::optional<std::pair<bool, bool>>
                                        survival_events = std::nullopt) {
  if (x_i.size() != y_j.size())
    throw error("pair_scores: dimension mismatch");
  std::vector<int> r(static_cast<std::size_t>(x_i.size()), 0);
  Eigen::Index start = 0;
  if (survival_events) {
    r[0] = censored::gehan_pair_score(x_i[0], survival_events->first, y_j[0],
                                      survival_events->second);
    start = 1;
  }
  for (Eigen::Index k = start; k < x_i.size(); ++k)
    r[k] = (x_i[k] > y_j[k]) - (x_i[k] < y_j[k]);
  return r;
}

/// phi(r): maps one comparison vector to a scalar. `weights` applies to
/// obrien_sum only (all-ones when empty).
inline double phi_value(PhiKind kind, std::span<const int> r,
                        std::span<const double> weights = {}) {
  switch (kind) {
    case PhiKind::obrien_sum: {
      if (!weights.empty() && weights.size() != r.size())
        throw error("phi_value: weights size mismatch");
      double s = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k)
        s += (weights.empty() ? 1.0 : weights[k]) * r[k];
      return s;
    }
    case PhiKind::wittkowski_all: {
      const auto [mn, mx] = std::minmax_element(r.begin(), r.end());
      return (*mx > 0) - (*mn < 0);
    }
    case PhiKind::wittkowski_majority: {
      const int s = std::accumulate(r.begin(), r.end(), 0);
      return (s > 0) - (s < 0);
    }
    case PhiKind::finkelstein_schoenfeld: {
      for (int v : r)
        if (v != 0) return v;
      return 0.0;
    }
  }
  throw std::logic_error("unreachable");
}

namespace detail {

inline std::optional<std::pair<bool, bool>> survival_pair(
    const TwoSampleData& data, Eigen::Index i, Eigen::Index j) {
  if (!data.has_survival()) return std::nullopt;
  return std::make_pair((*data.events_x)[i], (*data.events_y)[j]);
}

}  // namespace detail

/// Two-sample U-statistic: mean of phi over all m*n cross-arm pairs.
inline double u_statistic(const TwoSampleData& data, PhiKind phi,
                          std::span<const double> weights = {}) {
  validate(data);
  const Eigen::Index m = data.m(), n = data.n();
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      total += phi_value(
          phi, pair_scores(data.arm_x.row(i), data.arm_y.row(j),
                           detail::survival_pair(data, i, j)),
          weights);
  return total / (static_cast<double>(m) * static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// O'Brien rank-sum test
// ---------------------------------------------------------------------------

namespace detail {

/// Midranks (average ranks for ties) of a pooled vector, 1-based.
inline std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  return rank;
}

/// Two-sided p-value of the Wilcoxon rank-sum test applied to pooled
/// scores (first m entries = arm x): normal approximation with tie
/// correction. Degenerate scores (zero variance) give p = 1.
inline double wilcoxon_rank_sum_p(const std::vector<double>& scores,
                                  std::size_t m) {
  const std::size_t N = scores.size();
  const std::size_t n = N - m;
  const auto ranks = midranks(scores);
  double w = 0.0;
  for (std::size_t i = 0; i < m; ++i) w += ranks[i];
  // tie term over groups of equal scores
  std::vector<double> sorted(scores);
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < N) {
    std::size_t j = i;
    while (j + 1 < N && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  const double dm = static_cast<double>(m), dn = static_cast<double>(n),
               dN = static_cast<double>(N);
  const double variance =
      dm * dn / 12.0 * ((dN + 1.0) - tie_sum / (dN * (dN - 1.0)));
  if (variance <= 0.0) return 1.0;
  const double z = (w - dm * (dN + 1.0) / 2.0) / std::sqrt(variance);
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

/// Numeric arms with any survival endpoint replaced by pooled Gehan
/// scores, per the survival extension of the baseline procedures.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> numeric_arms(
    const TwoSampleData& data) {
  if (data.has_survival()) return censored::substitute_gehan(data);
  return {data.arm_x, data.arm_y};
}

}  // namespace detail

/// Per-subject summed midranks over all endpoints (pooled ranking), arm x
/// first. A survival endpoint enters through its Gehan scores.
inline std::vector<double> obrien_scores(const TwoSampleData& data) {
  validate(data);
  const auto [nx, ny] = detail::numeric_arms(data);
  const Eigen::Index m = nx.rows(), n = ny.rows(), d = nx.cols();
  std::vector<double> summed(static_cast<std::size_t>(m + n), 0.0);
  std::vector<double> column(static_cast<std::size_t>(m + n));
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) column[i] = nx(i, k);
    for (Eigen::Index j = 0; j < n; ++j) column[m + j] = ny(j, k);
    const auto ranks = detail::midranks(column);
    for (std::size_t i = 0; i < ranks.size(); ++i) summed[i] += ranks[i];
  }
  return summed;
}

/// O'Brien's procedure: summed per-subject midranks, then a two-sample
/// Wilcoxon rank-sum test (tie-corrected normal approximation) on the
/// summed ranks. Two-sided; reject iff p < alpha.
inline TestOutcome obrien_test(const TwoSampleData& data, double alpha) {
  const auto summed = obrien_scores(data);
  const std::size_t m = static_cast<std::size_t>(data.m());
  const double p = detail::wilcoxon_rank_sum_p(summed, m);

  TestOutcome outcome;
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean_x += summed[i];
  for (std::size_t j = m; j < summed.size(); ++j) mean_y += summed[j];
  outcome.statistic = mean_x / static_cast<double>(m) -
                      mean_y / static_cast<double>(summed.size() - m);
  outcome.threshold = alpha;
  outcome.p_value = p;
  outcome.reject = p < alpha;
  outcome.method = "obrien";
  outcome.alpha = alpha;
  outcome.meta["inference"] = "wilcoxon-normal-approx-tie-corrected";
  if (data.has_survival()) outcome.meta["survival"] = "gehan";
  return outcome;
}

// ---------------------------------------------------------------------------
// Permutation inference for the U-statistic family
// ---------------------------------------------------------------------------

/// Permutation test for u_statistic: p = (1 + #{b : |U_b| >= |U_obs|}) /
/// (B + 1) over random re-splits of the pooled sample; reject iff p <
/// alpha. Deterministic given the seed.
///
/// All phi maps here are antisymmetric with phi(0) = 0, so the cross-arm
/// sum for any split equals the sum of pooled row sums over the arm-x
/// subset (within-arm terms cancel); each permutation costs O(m) after an
/// O(N^2 d) precomputation.
inline TestOutcome permutation_test(const TwoSampleData& data, PhiKind phi,
                                    double alpha, int permutations,
                                    std::uint64_t seed,
                                    std::span<const double> weights = {}) {
  validate(data);
  if (permutations < 99)
    throw error("permutation_test: need at least 99 permutations");
  const Eigen::Index m = data.m(), n = data.n(), N = m + n;

  // Pooled phi matrix row sums. Survival comparisons use the pooled
  // times/indicators directly.
  Eigen::MatrixXd pooled(N, data.d());
  pooled.topRows(m) = data.arm_x;
  pooled.bottomRows(n) = data.arm_y;
  std::vector<bool> pooled_events;
  if (data.has_survival()) {
    pooled_events.reserve(N);
    pooled_events.insert(pooled_events.end(), data.events_x->begin(),
                         data.events_x->end());
    pooled_events.insert(pooled_events.end(), data.events_y->begin(),
                         data.events_y->end());
  }
  std::vector<double> row_sum(static_cast<std::size_t>(N), 0.0);
  for (Eigen::Index a = 0; a < N; ++a) {
    for (Eigen::Index b = 0; b < N; ++b) {
      if (a == b) continue;
      std::optional<std::pair<bool, bool>> ev;
      if (data.has_survival()) ev = std::make_pair(pooled_events[a], pooled_events[b]);
      row_sum[a] +=
          phi_value(phi, pair_scores(pooled.row(a), pooled.row(b), ev), weights);
    }
  }

  double obs = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) obs += row_sum[i];

  auto stream = rng::Stream::substream(
      seed, {rng::tag(std::uint64_t{0xBA5E}), static_cast<std::uint64_t>(N)});
  int count = 0;
  for (int b = 0; b < permutations; ++b) {
    const auto subset = stream.sample_indices(static_cast<std::size_t>(N),
                                              static_cast<std::size_t>(m));
    double perm_sum = 0.0;
    for (std::size_t idx : subset) perm_sum += row_sum[idx];
    if (std::abs(perm_sum) >= std::abs(obs)) ++count;
  }
  const double p =
      (1.0 + count) / (static_cast<double>(permutations) + 1.0);

  TestOutcome outcome;
  outcome.statistic = obs / (static_cast<double>(m) * static_cast<double>(n));
  outcome.threshold = alpha;
  outcome.p_value = p;
  outcome.reject = p < alpha;
  outcome.method = to_string(phi);
  outcome.alpha = alpha;
  outcome.meta["inference"] = "permutation(B=" + std::to_string(permutations) +
                              ",seed=" + std::to_string(seed) + ")";
  if (data.has_survival()) outcome.meta["survival"] = "gehan-pairwise";
  return outcome;
}

}  // namespace mvrank::baselines
