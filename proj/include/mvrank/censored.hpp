#pragma once

#include <Eigen/Dense>
#include <cstdlib>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvrank/core.hpp"
#include "mvrank/energytest.hpp"

// Right-censored survival endpoint via Gehan pairwise scores: each subject
// is scored by how many pooled subjects it definitely outlives minus how
// many definitely outlive it; the scores then replace the survival column
// in the rank pipeline.

namespace mvrank::censored {

/// Observed times (min of event and censoring time) with event indicators
/// (true = event observed).
struct SurvivalColumn {
  std::vector<double> times;
  std::vector<bool> events;
};

/// Gehan comparison of subject i against subject j:
///   +1  i definitely survives longer (both events with t_i > t_j, or
///       i censored at t_i >= j's event time)
///   -1  mirror case
///    0  indeterminate (both censored, overlapping censoring, tied events)
inline int gehan_pair_score(double t_i, bool event_i, double t_j, bool event_j) {
  if (event_i && event_j) {
    if (t_i > t_j) return 1;
    if (t_i < t_j) return -1;
    return 0;
  }
  if (!event_i && event_j && t_i >= t_j) return 1;
  if (event_i && !event_j && t_j >= t_i) return -1;
  return 0;
}

/// Per-subject importance scores u_i = sum_j gehan_pair_score(i, j) over
/// the whole column (self comparison contributes 0). Antisymmetry makes
/// the scores sum to zero.
inline std::vector<int> gehan_scores(const SurvivalColumn& col) {
  const std::size_t n = col.times.size();
  if (n < 1) throw std::invalid_argument("gehan_scores: empty column");
  if (col.events.size() != n)
    throw std::invalid_argument("gehan_scores: times/events length mismatch");
  for (double t : col.times)
    if (!std::isfinite(t)) throw std::invalid_argument("gehan_scores: non-finite time");
  std::vector<int> scores(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      scores[i] += gehan_pair_score(col.times[i], col.events[i], col.times[j],
                                    col.events[j]);
  return scores;
}

/// Pools both arms' survival columns, computes Gehan scores over the
/// pooled m+n subjects, and returns numeric arms with the survival column
/// replaced by the scores (x first in the pooled order).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> substitute_gehan(
    const TwoSampleData& data) {
  if (!data.has_survival())
    throw error("substitute_gehan: dataset has no time-to-event endpoint");
  const Eigen::Index m = data.m(), n = data.n();
  SurvivalColumn pooled;
  pooled.times.reserve(m + n);
  pooled.events.reserve(m + n);
  for (Eigen::Index i = 0; i < m; ++i) {
    pooled.times.push_back(data.arm_x(i, 0));
    pooled.events.push_back((*data.events_x)[i]);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    pooled.times.push_back(data.arm_y(j, 0));
    pooled.events.push_back((*data.events_y)[j]);
  }
  const auto scores = gehan_scores(pooled);
  Eigen::MatrixXd nx = data.arm_x, ny = data.arm_y;
  for (Eigen::Index i = 0; i < m; ++i) nx(i, 0) = scores[i];
  for (Eigen::Index j = 0; j < n; ++j) ny(j, 0) = scores[m + j];
  return {std::move(nx), std::move(ny)};
}

/// Rank energy test for a dataset whose first endpoint is time-to-event:
/// Gehan scores replace the survival column, then the usual rank pipeline
/// runs on the substituted arms.
inline TestOutcome test_with_survival(const TwoSampleData& data,
                                      const energy::TestOptions& opts) {
  validate(data);
  if (!data.has_survival())
    throw error("test_with_survival: schema has no time-to-event endpoint");
  auto [nx, ny] = substitute_gehan(data);
  TestOutcome outcome =
      energy::detail::run_rank_energy(nx, ny, opts, "rank-energy");
  outcome.meta["survival"] = "gehan";
  return outcome;
}

}  // namespace mvrank::censored
