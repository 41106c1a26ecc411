#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "freeunmix/errors.hpp"

namespace freeunmix {

/// Result of the scaling- and permutation-invariant unmixing error.
/// error is zero exactly when Ahat = A * P * D for a permutation P and a
/// nonsingular diagonal D. best_permutation maps row r of inv(Ahat) * A to
/// its assigned identity column; best_scaling holds the optimal row scales
/// (sign included).
struct ErrorReport {
  double error = 0.0;
  std::vector<int> best_permutation;
  Eigen::VectorXd best_scaling;
};

/// min over diagonal D and permutation P of || P D inv(Ahat) A - I ||_F.
///
/// For a fixed assignment of row r to identity column t the optimal scale is
/// closed-form, d = B(r,t) / ||B.row(r)||^2 with cost 1 - B(r,t)^2 /
/// ||B.row(r)||^2, so the minimization reduces to an assignment problem:
/// exhaustive for s <= 8, Hungarian above (exact either way, the costs are
/// separable per (row, target) pair). Throws on singular input.
ErrorReport unmixing_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_hat);

/// Normalized squared inner products between the singular-vector bases of two
/// equally-sized matrices: left(i,j) = N <u1_i, u2_j>^2 and right(i,j) =
/// M <v1_i, v2_j>^2, so the isotropic baseline is 1 and every row averages to
/// exactly 1 (Parseval).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> freeness_heuristic(
    const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2);

namespace detail {

/// Exact minimum-cost assignment (row -> column) of a square cost matrix.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace detail

}  // namespace freeunmix
