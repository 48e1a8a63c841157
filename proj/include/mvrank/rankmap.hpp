#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

#include "mvrank/assign.hpp"
#include "mvrank/lds.hpp"

// Empirical multivariate ranks: pool the two arms, assign the pooled
// observations onto a point set in [0,1]^d at minimum total squared
// distance, and read each observation's rank off its assigned point.

namespace mvrank::ranks {

/// Ranks of both arms plus the assignment they came from. The m+n rank
/// rows are exactly the point-set rows, each used once.
struct RankAssignment {
  Eigen::MatrixXd ranks_x;  // m x d
  Eigen::MatrixXd ranks_y;  // n x d
  lds::PointSet point_set;
  assign::Assignment assignment;
};

/// Optional per-endpoint standardization of the pooled sample (mean 0,
/// sd 1; constant columns become all-zero). Raw endpoint scales otherwise
/// enter the squared-distance cost directly.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> standardize_pooled(
    const Eigen::MatrixXd& arm_x, const Eigen::MatrixXd& arm_y) {
  const Eigen::Index m = arm_x.rows(), n = arm_y.rows(), d = arm_x.cols();
  Eigen::MatrixXd sx = arm_x, sy = arm_y;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double mean =
        (arm_x.col(k).sum() + arm_y.col(k).sum()) / static_cast<double>(m + n);
    const double ss = (arm_x.col(k).array() - mean).square().sum() +
                      (arm_y.col(k).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(m + n));
    if (sd > 0.0) {
      sx.col(k) = (arm_x.col(k).array() - mean) / sd;
      sy.col(k) = (arm_y.col(k).array() - mean) / sd;
    } else {
      sx.col(k).setZero();
      sy.col(k).setZero();
    }
  }
  return {std::move(sx), std::move(sy)};
}

/// Pool the arms (x rows first), solve the assignment onto `ps`, and split
/// the assigned points back into per-arm rank matrices.
inline RankAssignment empirical_ranks(const Eigen::MatrixXd& arm_x,
                                      const Eigen::MatrixXd& arm_y,
                                      lds::PointSet ps) {
  const Eigen::Index m = arm_x.rows(), n = arm_y.rows();
  if (arm_x.cols() != arm_y.cols())
    throw std::invalid_argument("empirical_ranks: arms disagree on d");
  if (ps.size() != m + n || ps.dim() != arm_x.cols())
    throw std::invalid_argument(
        "empirical_ranks: point set must be (m+n) x d");

  assign::AssignmentProblem problem;
  problem.sources.resize(m + n, arm_x.cols());
  problem.sources.topRows(m) = arm_x;
  problem.sources.bottomRows(n) = arm_y;
  problem.targets = ps.points;

  RankAssignment ra;
  ra.assignment = assign::solve_lap(problem);
  ra.ranks_x.resize(m, ps.dim());
  ra.ranks_y.resize(n, ps.dim());
  for (Eigen::Index i = 0; i < m; ++i)
    ra.ranks_x.row(i) = ps.points.row(ra.assignment.perm[i]);
  for (Eigen::Index j = 0; j < n; ++j)
    ra.ranks_y.row(j) = ps.points.row(ra.assignment.perm[m + j]);
  ra.point_set = std::move(ps);
  return ra;
}

}  // namespace mvrank::ranks
