#include "freeunmix/whitening.hpp"

#include <cmath>
#include <string>

#include "freeunmix/free_stats.hpp"

namespace freeunmix {

namespace {

constexpr double kRankTol = 1e-10;  // relative to the largest covariance eigenvalue

struct CovEig {
  Eigen::MatrixXd u;      // columns ordered by descending eigenvalue, sign-fixed
  Eigen::VectorXd evals;  // descending
};

CovEig eig_descending(const Eigen::MatrixXd& c) {
  Eigen::VectorXd w;
  Eigen::MatrixXd v;
  detail::sym_eig(c, w, v);
  const int s = static_cast<int>(c.rows());
  CovEig out;
  out.u.resize(s, s);
  out.evals.resize(s);
  for (int i = 0; i < s; ++i) {
    out.evals(i) = w(s - 1 - i);
    Eigen::VectorXd col = v.col(s - 1 - i);
    Eigen::Index imax;
    col.cwiseAbs().maxCoeff(&imax);
    if (col(imax) < 0) col = -col;
    out.u.col(i) = col;
  }
  return out;
}

void check_rank(const Eigen::VectorXd& evals, int needed) {
  double largest = evals(0);
  for (int i = 0; i < needed; ++i) {
    if (!(evals(i) >= kRankTol * largest) || !(evals(i) > 0.0)) {
      if (needed < evals.size())
        throw RankError("whitening: fewer than " + std::to_string(needed) +
                        " significant covariance eigenvalues");
      throw SingularCovarianceError(
          "whitening: covariance eigenvalue " + std::to_string(i) +
              " below rank tolerance",
          i);
    }
  }
}

}  // namespace

std::pair<MatrixStack, Eigen::VectorXcd> center(const MatrixStack& z) {
  const int s = z.count();
  Eigen::VectorXcd means(s);
  const double n = static_cast<double>(z.rows());
  const double nm = static_cast<double>(z.rows() * z.cols());
  MatrixStack out = z;
  if (z.kind() == StackKind::SelfAdjoint) {
    for (int i = 0; i < s; ++i) {
      double mu = z.real(i).trace() / n;
      means(i) = mu;
      out.real(i).diagonal().array() -= mu;
    }
  } else if (z.kind() == StackKind::Rectangular) {
    for (int i = 0; i < s; ++i) {
      double mu = z.real(i).sum() / nm;
      means(i) = mu;
      out.real(i).array() -= mu;
    }
  } else {
    for (int i = 0; i < s; ++i) {
      std::complex<double> mu = z.cplx(i).sum() / nm;
      means(i) = mu;
      out.cplx(i).array() -= mu;
    }
  }
  return {std::move(out), std::move(means)};
}

Eigen::MatrixXd covariance(const MatrixStack& zt) {
  const int s = zt.count();
  const double n = static_cast<double>(zt.rows());
  Eigen::MatrixXd c(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = i; j < s; ++j) {
      double v;
      if (zt.is_complex())
        v = zt.cplx(i).cwiseProduct(zt.cplx(j).conjugate()).sum().real() / n;
      else
        v = zt.real(i).cwiseProduct(zt.real(j)).sum() / n;
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

WhiteningResult whiten(const MatrixStack& z) {
  auto [zt, means] = center(z);
  Eigen::MatrixXd c = covariance(zt);
  CovEig e = eig_descending(c);
  check_rank(e.evals, z.count());
  Eigen::VectorXd sigma = e.evals.cwiseSqrt();
  Eigen::MatrixXd t =
      e.u * sigma.cwiseInverse().asDiagonal() * e.u.transpose();
  WhiteningResult r{zt.linear_combination(t), e.u, sigma, means};
  return r;
}

WhiteningResult whiten_overdetermined(const MatrixStack& z, int s) {
  const int p = z.count();
  if (s < 1 || s > p)
    throw RankError("whiten_overdetermined: need 1 <= s <= count");
  if (s == p) return whiten(z);
  auto [zt, means] = center(z);
  Eigen::MatrixXd c = covariance(zt);
  CovEig e = eig_descending(c);
  check_rank(e.evals, s);
  Eigen::MatrixXd us = e.u.leftCols(s);
  Eigen::VectorXd sigma = e.evals.head(s).cwiseSqrt();
  Eigen::MatrixXd t = sigma.cwiseInverse().asDiagonal() * us.transpose();
  WhiteningResult r{zt.linear_combination(t), us, sigma, means};
  return r;
}

WhiteningResult whiten_vectorized(const MatrixStack& z) {
  const int s = z.count();
  const double nm = static_cast<double>(z.rows() * z.cols());
  MatrixStack zt = z;
  Eigen::VectorXcd means(s);
  for (int i = 0; i < s; ++i) {
    if (z.is_complex()) {
      std::complex<double> mu = z.cplx(i).sum() / nm;
      means(i) = mu;
      zt.cplx(i).array() -= mu;
    } else {
      double mu = z.real(i).sum() / nm;
      means(i) = mu;
      zt.real(i).array() -= mu;
    }
  }
  Eigen::MatrixXd c(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = i; j < s; ++j) {
      double v;
      if (zt.is_complex())
        v = zt.cplx(i).cwiseProduct(zt.cplx(j).conjugate()).sum().real() / nm;
      else
        v = zt.real(i).cwiseProduct(zt.real(j)).sum() / nm;
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  CovEig e = eig_descending(c);
  check_rank(e.evals, s);
  Eigen::VectorXd sigma = e.evals.cwiseSqrt();
  Eigen::MatrixXd t =
      e.u * sigma.cwiseInverse().asDiagonal() * e.u.transpose();
  WhiteningResult r{zt.linear_combination(t), e.u, sigma, means};
  return r;
}

}  // namespace freeunmix
