#include "freeunmix/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace freeunmix {

namespace detail {

// Hungarian algorithm with potentials and shortest augmenting paths, O(n^3).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

ErrorReport unmixing_error(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& a_hat) {
  const int s = static_cast<int>(a.rows());
  if (a.cols() != s || a_hat.rows() != s || a_hat.cols() != s)
    throw DimensionError("unmixing_error: matrices must be square and equal-sized");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a_hat);
  if (!lu.isInvertible())
    throw NumericalError("unmixing_error: estimated mixing matrix is singular");
  Eigen::FullPivLU<Eigen::MatrixXd> lu_a(a);
  if (!lu_a.isInvertible())
    throw NumericalError("unmixing_error: true mixing matrix is singular");
  Eigen::MatrixXd b = lu.solve(a);

  // cost of sending row r to identity column t, with the scale optimized out
  Eigen::VectorXd row_norm2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd cost(s, s);
  for (int r = 0; r < s; ++r)
    for (int t = 0; t < s; ++t)
      cost(r, t) = 1.0 - b(r, t) * b(r, t) / row_norm2(r);

  std::vector<int> best(s);
  if (s <= 8) {
    std::vector<int> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    double best_total = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int r = 0; r < s; ++r) total += cost(r, perm[r]);
      if (total < best_total) {
        best_total = total;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = detail::solve_assignment(cost);
  }

  ErrorReport report;
  report.best_permutation = best;
  report.best_scaling.resize(s);
  double total = 0.0;
  for (int r = 0; r < s; ++r) {
    report.best_scaling(r) = b(r, best[r]) / row_norm2(r);
    total += std::max(0.0, cost(r, best[r]));
  }
  report.error = std::sqrt(total);
  return report;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> freeness_heuristic(
    const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2) {
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols())
    throw DimensionError("freeness_heuristic: dimension mismatch");
  Eigen::BDCSVD<Eigen::MatrixXd> svd1(x1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::BDCSVD<Eigen::MatrixXd> svd2(x2, Eigen::ComputeFullU | Eigen::ComputeFullV);
  double n = static_cast<double>(x1.rows());
  double m = static_cast<double>(x1.cols());
  Eigen::MatrixXd left =
      n * (svd1.matrixU().transpose() * svd2.matrixU()).array().square();
  Eigen::MatrixXd right =
      m * (svd1.matrixV().transpose() * svd2.matrixV()).array().square();
  return {left, right};
}

}  // namespace freeunmix
