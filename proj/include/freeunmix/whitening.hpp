#pragma once

#include <Eigen/Dense>
#include <utility>

#include "freeunmix/matrix_stack.hpp"

namespace freeunmix {

/// Whitened stack plus the factors needed to reconstruct the centered input:
/// for square whitening, Ztilde = ((U Sigma U^T) kron I) Y. For the
/// overdetermined variant eigvecs is p x s and the whitener is
/// Sigma^-1 U_s^T. Singular values are strictly positive and nonincreasing.
struct WhiteningResult {
  MatrixStack whitened;
  Eigen::MatrixXd eigvecs;
  Eigen::VectorXd singvals;
  Eigen::VectorXcd means;  // per-component centering offsets (imag 0 for real data)
};

/// Centering step: self-adjoint components lose their trace mean
/// (Zbar_i = (Tr Z_i / N) I), rectangular components their scalar entry mean.
/// Returns the centered stack and the offsets.
std::pair<MatrixStack, Eigen::VectorXcd> center(const MatrixStack& z);

/// Empirical covariance C_ij = Tr(Zt_i Zt_j^H) / N of a centered stack.
/// For complex stacks only the real part is kept, so the result is always
/// real symmetric positive semi-definite.
Eigen::MatrixXd covariance(const MatrixStack& z_tilde);

/// Free whitening: center, form C, eigendecompose C = U Sigma^2 U^T and apply
/// (U Sigma^-1 U^T) kron I. Covariance eigenvalues below 1e-10 of the largest
/// raise SingularCovarianceError. Eigenvector columns are sign-fixed so their
/// largest-magnitude entry is positive.
WhiteningResult whiten(const MatrixStack& z);

/// Rank-s whitening of a p-component stack (p >= s): keeps the top s
/// eigenpairs and outputs Y = (Sigma_s^-1 U_s^T kron I) Ztilde with s
/// components. Equals whiten() when s == p. Raises RankError when fewer than
/// s covariance eigenvalues are significant.
WhiteningResult whiten_overdetermined(const MatrixStack& z, int s);

/// Scalar whitening of the vectorized stack: subtract each component's entry
/// mean, form C = ztilde ztilde^H / (N M) (real part), and whiten with
/// U Sigma^-1 U^T. Output keeps the original matrix shape.
WhiteningResult whiten_vectorized(const MatrixStack& z);

}  // namespace freeunmix
