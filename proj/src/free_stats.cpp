#include "freeunmix/free_stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <lapacke.h>

#include "freeunmix/matrix_stack.hpp"

namespace freeunmix {

namespace detail {

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd w(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(),
                                   n, w.data());
  if (info != 0) throw NumericalError("dsyevd failed to converge");
  return w;
}

void sym_eig(const Eigen::MatrixXd& a, Eigen::VectorXd& w, Eigen::MatrixXd& v) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  v = a;
  w.resize(n);
  lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, v.data(), n, w.data());
  if (info != 0) throw NumericalError("dsyevd failed to converge");
}

Eigen::VectorXd herm_eigenvalues(const Eigen::MatrixXcd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXcd work = a;
  Eigen::VectorXd w(n);
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'N', 'L', n,
      reinterpret_cast<lapack_complex_double*>(work.data()), n, w.data());
  if (info != 0) throw NumericalError("zheevd failed to converge");
  return w;
}

void herm_eig(const Eigen::MatrixXcd& a, Eigen::VectorXd& w,
              Eigen::MatrixXcd& v) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  v = a;
  w.resize(n);
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'V', 'L', n,
      reinterpret_cast<lapack_complex_double*>(v.data()), n, w.data());
  if (info != 0) throw NumericalError("zheevd failed to converge");
}

double log_gap_mean(Eigen::VectorXd ev) {
  const Eigen::Index n = ev.size();
  std::sort(ev.data(), ev.data() + n);
  // Only adjacent sorted pairs can collide.
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double tol = 1e-12 * std::max(1.0, std::abs(ev(i)) + std::abs(ev(i + 1)));
    if (ev(i + 1) - ev(i) < tol)
      throw DegenerateSpectrumError("eigenvalue collision: gap below tolerance");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) acc += std::log(ev(j) - ev(i));
  return 2.0 * acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace {

template <typename Mat>
void require_hermitian(const Mat& x) {
  if (x.rows() != x.cols())
    throw DimensionError("self-adjoint statistic requires a square matrix");
  if (!is_hermitian(x))
    throw DimensionError("self-adjoint statistic requires a Hermitian matrix");
}

// Tr(X^2)/N and Tr(X^4)/N for Hermitian X; both are exactly real because
// Tr(X^2) = ||X||_F^2 and Tr(X^4) = ||X^2||_F^2.
template <typename Mat>
double kurtosis_sa_impl(const Mat& x) {
  require_hermitian(x);
  const double n = static_cast<double>(x.rows());
  Mat x2 = x * x;
  double m2 = x.squaredNorm() / n;
  double m4 = x2.squaredNorm() / n;
  return m4 - 2.0 * m2 * m2;
}

template <typename Mat>
double kurtosis_rect_impl(const Mat& x) {
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(x.cols());
  Mat g = x * x.adjoint();
  double t1 = g.real().trace() / n;
  double t2 = g.squaredNorm() / n;
  return t2 - (1.0 + n / m) * t1 * t1;
}

Eigen::VectorXd gram_eigenvalues(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd g = x * x.transpose();
  return sym_eigenvalues(g);
}

Eigen::VectorXd gram_eigenvalues(const Eigen::MatrixXcd& x) {
  Eigen::MatrixXcd g = x * x.adjoint();
  return herm_eigenvalues(g);
}

template <typename Mat>
double entropy_rect_impl(const Mat& x) {
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(x.cols());
  const double alpha = n / (n + m);
  const double beta = m / (n + m);
  Eigen::VectorXd ev = gram_eigenvalues(x);
  double lmax = ev.maxCoeff();
  double log_sum = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= 0.0 || ev(i) < 1e-14 * std::max(1.0, lmax))
      throw DegenerateSpectrumError(
          "rectangular entropy: zero eigenvalue of XX^H");
    log_sum += std::log(ev(i));
  }
  double pair_term = x.rows() >= 2 ? alpha * alpha * log_gap_mean(ev) : 0.0;
  return pair_term + (beta - alpha) * alpha * log_sum / n;
}

}  // namespace
}  // namespace detail

double free_kurtosis_sa(const Eigen::MatrixXd& x) {
  return detail::kurtosis_sa_impl(x);
}

double free_kurtosis_sa(const Eigen::MatrixXcd& x) {
  return detail::kurtosis_sa_impl(x);
}

double free_entropy_sa(const Eigen::MatrixXd& x) {
  detail::require_hermitian(x);
  if (x.rows() < 2)
    throw DimensionError("self-adjoint entropy requires N >= 2");
  return detail::log_gap_mean(detail::sym_eigenvalues(x));
}

double free_entropy_sa(const Eigen::MatrixXcd& x) {
  detail::require_hermitian(x);
  if (x.rows() < 2)
    throw DimensionError("self-adjoint entropy requires N >= 2");
  return detail::log_gap_mean(detail::herm_eigenvalues(x));
}

double free_kurtosis_rect(const Eigen::MatrixXd& x) {
  return detail::kurtosis_rect_impl(x);
}

double free_kurtosis_rect(const Eigen::MatrixXcd& x) {
  return detail::kurtosis_rect_impl(x);
}

double free_entropy_rect(const Eigen::MatrixXd& x) {
  return detail::entropy_rect_impl(x);
}

double free_entropy_rect(const Eigen::MatrixXcd& x) {
  return detail::entropy_rect_impl(x);
}

double classical_kurtosis(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2)
    throw DimensionError("classical kurtosis requires at least 2 samples");
  double m2 = x.squaredNorm() / static_cast<double>(x.size());
  double m4 = x.array().square().square().mean();
  return m4 - 3.0 * m2 * m2;
}

double negentropy_approx(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2)
    throw DimensionError("negentropy requires at least 2 samples");
  double m3 = x.array().cube().mean();
  double c4 = classical_kurtosis(x);
  return m3 * m3 / 12.0 + c4 * c4 / 48.0;
}

}  // namespace freeunmix
