#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

// Optimal assignment under squared Euclidean cost: the empirical rank map
// is the minimizing permutation of pooled observations onto rank targets.
// Solved exactly with the Jonker-Volgenant shortest-augmenting-path
// algorithm; a factorial brute-force solver doubles as the test oracle.

namespace mvrank::assign {

struct AssignmentProblem {
  Eigen::MatrixXd sources;  // N x d
  Eigen::MatrixXd targets;  // N x d
};

/// perm[i] = target index assigned to source i (a bijection on 0..N-1).
struct Assignment {
  std::vector<int> perm;
  double total_cost = 0.0;
};

/// Entry (i, j) = squared Euclidean distance between source i and target j.
inline Eigen::MatrixXd cost_matrix(const Eigen::MatrixXd& sources,
                                   const Eigen::MatrixXd& targets) {
  if (sources.cols() != targets.cols())
    throw std::invalid_argument("cost_matrix: dimension mismatch");
  const Eigen::Index n_src = sources.rows(), n_tgt = targets.rows();
  Eigen::MatrixXd cost(n_src, n_tgt);
  for (Eigen::Index i = 0; i < n_src; ++i)
    for (Eigen::Index j = 0; j < n_tgt; ++j)
      cost(i, j) = (sources.row(i) - targets.row(j)).squaredNorm();
  return cost;
}

namespace detail {

// Row-major storage: the solver's hot loops scan rows.
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Jonker & Volgenant (1987) shortest augmenting paths: column reduction
// and reduction transfer build feasible duals, then a Dijkstra-style
// augmentation assigns each remaining free row. The JV "augmenting row
// reduction" heuristic is omitted: on squared-distance cost matrices its
// retry loop degenerates into tens of thousands of bid iterations and
// roughly doubles the solve time. Rows are processed in index order,
// which fixes the result under cost ties. O(N^3) worst case.
inline double solve_jv(const RowMajorMatrix& cost,
                       std::vector<Eigen::Index>& row_to_col) {
  using Index = Eigen::Index;
  const Index n = cost.rows();
  row_to_col.assign(n, -1);
  std::vector<Index> col_to_row(n, -1);
  std::vector<double> v(n, 0.0);  // column duals

  // Column reduction, scanned right to left.
  {
    std::vector<Index> matches(n, 0);
    for (Index j = n - 1; j >= 0; --j) {
      double min_cost = cost(0, j);
      Index imin = 0;
      for (Index i = 1; i < n; ++i)
        if (cost(i, j) < min_cost) { min_cost = cost(i, j); imin = i; }
      v[j] = min_cost;
      if (++matches[imin] == 1) {
        row_to_col[imin] = j;
        col_to_row[j] = imin;
      }
    }

    // Reduction transfer from rows assigned exactly once.
    for (Index i = 0; i < n; ++i) {
      if (matches[i] == 1) {
        const Index j1 = row_to_col[i];
        double min_red = std::numeric_limits<double>::max();
        for (Index j = 0; j < n; ++j)
          if (j != j1) min_red = std::min(min_red, cost(i, j) - v[j]);
        if (min_red < std::numeric_limits<double>::max()) v[j1] -= min_red;
      }
    }

    std::vector<Index> free_rows;
    for (Index i = 0; i < n; ++i)
      if (matches[i] == 0) free_rows.push_back(i);

    // Shortest augmenting path for each remaining free row.
    std::vector<double> dist(n);
    std::vector<Index> pred(n), col_list(n);
    for (const Index free_row : free_rows) {
      for (Index j = 0; j < n; ++j) {
        dist[j] = cost(free_row, j) - v[j];
        pred[j] = free_row;
        col_list[j] = j;
      }
      Index low = 0, up = 0, last = 0;
      double min_dist = 0.0;
      Index end_col = -1;
      while (end_col < 0) {
        if (up == low) {
          last = low - 1;
          min_dist = dist[col_list[up++]];
          for (Index k2 = up; k2 < n; ++k2) {
            const Index j = col_list[k2];
            const double h = dist[j];
            if (h <= min_dist) {
              if (h < min_dist) { up = low; min_dist = h; }
              col_list[k2] = col_list[up];
              col_list[up++] = j;
            }
          }
          for (Index k2 = low; k2 < up; ++k2)
            if (col_to_row[col_list[k2]] < 0) { end_col = col_list[k2]; break; }
        }
        if (end_col < 0) {
          const Index j1 = col_list[low++];
          const Index i = col_to_row[j1];
          const double h = cost(i, j1) - v[j1] - min_dist;
          for (Index k2 = up; k2 < n; ++k2) {
            const Index j = col_list[k2];
            const double reduced = cost(i, j) - v[j] - h;
            if (reduced < dist[j]) {
              pred[j] = i;
              if (reduced == min_dist) {
                if (col_to_row[j] < 0) { end_col = j; break; }
                col_list[k2] = col_list[up];
                col_list[up++] = j;
              }
              dist[j] = reduced;
            }
          }
        }
      }
      for (Index k2 = 0; k2 <= last; ++k2) {
        const Index j = col_list[k2];
        v[j] += dist[j] - min_dist;
      }
      // Trace the alternating path back to the free row.
      Index j = end_col;
      for (;;) {
        const Index i = pred[j];
        col_to_row[j] = i;
        std::swap(row_to_col[i], j);
        if (i == free_row) break;
      }
    }
  }

  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += cost(i, row_to_col[i]);
  return total;
}

}  // namespace detail

/// Exact minimum-cost assignment. Deterministic under ties: rows are
/// processed in index order.
inline Assignment solve_lap(const AssignmentProblem& problem) {
  if (problem.sources.rows() != problem.targets.rows())
    throw std::invalid_argument("solve_lap: source/target counts differ");
  if (problem.sources.rows() < 1)
    throw std::invalid_argument("solve_lap: empty problem");
  const detail::RowMajorMatrix cost =
      cost_matrix(problem.sources, problem.targets);
  if (!cost.allFinite())
    throw std::invalid_argument("solve_lap: non-finite cost entries");
  std::vector<Eigen::Index> row_to_col;
  detail::solve_jv(cost, row_to_col);
  Assignment result;
  result.perm.assign(row_to_col.begin(), row_to_col.end());
  result.total_cost = 0.0;
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    result.total_cost += cost(i, result.perm[i]);
  return result;
}

/// Exhaustive oracle over all N! permutations (N <= 9); ties resolve to the
/// lexicographically smallest permutation.
inline Assignment brute_force_lap(const AssignmentProblem& problem) {
  const Eigen::Index n = problem.sources.rows();
  if (n > 9) throw std::invalid_argument("brute_force_lap: N must be <= 9");
  if (n != problem.targets.rows())
    throw std::invalid_argument("brute_force_lap: source/target counts differ");
  const Eigen::MatrixXd cost = cost_matrix(problem.sources, problem.targets);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  best.total_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += cost(i, perm[i]);
    if (total < best.total_cost) {
      best.total_cost = total;
      best.perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace mvrank::assign
