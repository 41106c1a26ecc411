#pragma once

#include <Eigen/Dense>

#include "freeunmix/errors.hpp"

namespace freeunmix {

/// Empirical free and classical statistics evaluated on single matrices or
/// sample vectors. All functions are pure; complex inputs are accepted where
/// the statistic stays real (Hermitian matrices, Gram spectra).

/// Self-adjoint free kurtosis: Tr(X^4)/N - 2 (Tr(X^2)/N)^2.
/// Throws DimensionError for non-square or non-Hermitian input.
double free_kurtosis_sa(const Eigen::MatrixXd& x);
double free_kurtosis_sa(const Eigen::MatrixXcd& x);

/// Self-adjoint free entropy: mean of log|lambda_i - lambda_j| over ordered
/// pairs i != j. Requires N >= 2 and a collision-free spectrum: any gap below
/// 1e-12 * max(1, |l_i| + |l_j|) raises DegenerateSpectrumError.
double free_entropy_sa(const Eigen::MatrixXd& x);
double free_entropy_sa(const Eigen::MatrixXcd& x);

/// Rectangular free kurtosis: Tr((XX^H)^2)/N - (1 + N/M) (Tr(XX^H)/N)^2.
double free_kurtosis_rect(const Eigen::MatrixXd& x);
double free_kurtosis_rect(const Eigen::MatrixXcd& x);

/// Rectangular free entropy on the spectrum l of XX^H, with a = N/(N+M),
/// b = M/(N+M):
///   a^2 * sum_{i != j} log|l_i - l_j| / (N(N-1)) + (b-a) a * mean(log l_i).
/// The pair term is 0 for N = 1. Zero/negative or colliding eigenvalues raise
/// DegenerateSpectrumError.
double free_entropy_rect(const Eigen::MatrixXd& x);
double free_entropy_rect(const Eigen::MatrixXcd& x);

/// Classical kurtosis of a sample vector: mean(x^4) - 3 mean(x^2)^2.
/// Requires at least two samples.
double classical_kurtosis(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Cumulant approximation of negentropy for a centered, whitened sample:
/// mean(x^3)^2 / 12 + c4(x)^2 / 48. Nonnegative by construction.
double negentropy_approx(const Eigen::Ref<const Eigen::VectorXd>& x);

namespace detail {

/// Mean log-gap over ordered pairs of an (unsorted) real spectrum; the
/// entropy kernel shared by both settings. Throws on collisions.
double log_gap_mean(Eigen::VectorXd eigenvalues);

/// Eigenvalues of a symmetric/Hermitian matrix, ascending (LAPACK dsyevd /
/// zheevd; falls back to Eigen for tiny matrices).
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a);
Eigen::VectorXd herm_eigenvalues(const Eigen::MatrixXcd& a);

/// Full symmetric/Hermitian eigendecomposition, eigenvalues ascending.
void sym_eig(const Eigen::MatrixXd& a, Eigen::VectorXd& w, Eigen::MatrixXd& v);
void herm_eig(const Eigen::MatrixXcd& a, Eigen::VectorXd& w,
              Eigen::MatrixXcd& v);

}  // namespace detail

}  // namespace freeunmix
