#include "freeunmix/manifold_opt.hpp"

#include <cmath>
#include <complex>

#include "freeunmix/free_stats.hpp"
#include "freeunmix/rng.hpp"

namespace freeunmix {

const char* to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::SaKurtosis:
      return "sa-kurtosis";
    case ObjectiveKind::SaEntropy:
      return "sa-entropy";
    case ObjectiveKind::RectKurtosis:
      return "rect-kurtosis";
    case ObjectiveKind::RectEntropy:
      return "rect-entropy";
    case ObjectiveKind::ScalarKurtosis:
      return "scalar-kurtosis";
    case ObjectiveKind::ScalarNegentropy:
      return "scalar-negentropy";
  }
  return "?";
}

bool is_kurtosis_kind(ObjectiveKind kind) {
  return kind == ObjectiveKind::SaKurtosis ||
         kind == ObjectiveKind::RectKurtosis ||
         kind == ObjectiveKind::ScalarKurtosis;
}

bool is_matrix_kind(ObjectiveKind kind) {
  return kind != ObjectiveKind::ScalarKurtosis &&
         kind != ObjectiveKind::ScalarNegentropy;
}

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

void validate_kind(ObjectiveKind kind, const MatrixStack& y) {
  switch (kind) {
    case ObjectiveKind::SaKurtosis:
    case ObjectiveKind::SaEntropy:
      if (y.kind() != StackKind::SelfAdjoint)
        throw KindMismatchError("self-adjoint objective on a non-self-adjoint stack");
      return;
    case ObjectiveKind::RectKurtosis:
    case ObjectiveKind::RectEntropy:
      if (y.kind() == StackKind::SelfAdjoint)
        throw KindMismatchError("rectangular objective on a self-adjoint stack");
      return;
    case ObjectiveKind::ScalarKurtosis:
    case ObjectiveKind::ScalarNegentropy:
      if (y.is_complex())
        throw KindMismatchError("scalar objective requires a real stack");
      return;
  }
}

Eigen::Map<const VectorXd> as_vector(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

double component_contrast(ObjectiveKind kind, const MatrixStack& x, int i) {
  switch (kind) {
    case ObjectiveKind::SaKurtosis:
      return -std::abs(free_kurtosis_sa(x.real(i)));
    case ObjectiveKind::SaEntropy:
      return free_entropy_sa(x.real(i));
    case ObjectiveKind::RectKurtosis:
      return x.is_complex() ? -std::abs(free_kurtosis_rect(x.cplx(i)))
                            : -std::abs(free_kurtosis_rect(x.real(i)));
    case ObjectiveKind::RectEntropy:
      return x.is_complex() ? free_entropy_rect(x.cplx(i))
                            : free_entropy_rect(x.real(i));
    case ObjectiveKind::ScalarKurtosis:
      return -std::abs(classical_kurtosis(as_vector(x.real(i))));
    case ObjectiveKind::ScalarNegentropy:
      return -negentropy_approx(as_vector(x.real(i)));
  }
  return 0.0;
}

// sum_{i != j} (d_i - d_j) / (l_i - l_j) over an ascending spectrum; throws
// when a gap is inside the collision tolerance.
double eigen_pair_sum(const VectorXd& lam, const VectorXd& d) {
  const Eigen::Index n = lam.size();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double tol = 1e-12 * std::max(1.0, std::abs(lam(i)) + std::abs(lam(i + 1)));
    if (lam(i + 1) - lam(i) < tol)
      throw DegenerateSpectrumError("eigenvalue collision in entropy gradient");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      acc += (d(i) - d(j)) / (lam(i) - lam(j));
  return 2.0 * acc;
}

// --- direct (uncached) gradients, one column per component -----------------

void grad_column_sa_kurtosis(const MatrixStack& y, const MatrixXd& x,
                             Eigen::Ref<VectorXd> col) {
  const double n = static_cast<double>(x.rows());
  double m2 = x.squaredNorm();  // Tr(X^2)
  MatrixXd x2 = x * x;
  MatrixXd x3 = x2 * x;
  double kurt = x2.squaredNorm() / n - 2.0 * (m2 / n) * (m2 / n);
  double s = sgn(kurt);
  for (int k = 0; k < y.count(); ++k) {
    double t_yx3 = y.real(k).cwiseProduct(x3).sum();
    double t_yx = y.real(k).cwiseProduct(x).sum();
    col(k) = -s * (4.0 / n * t_yx3 - 8.0 / (n * n) * m2 * t_yx);
  }
}

void grad_column_sa_entropy(const MatrixStack& y, const MatrixXd& x,
                            Eigen::Ref<VectorXd> col) {
  const double n = static_cast<double>(x.rows());
  VectorXd lam;
  MatrixXd v;
  detail::sym_eig(x, lam, v);
  VectorXd d(lam.size());
  for (int k = 0; k < y.count(); ++k) {
    MatrixXd b = y.real(k) * v;
    for (Eigen::Index i = 0; i < lam.size(); ++i) d(i) = v.col(i).dot(b.col(i));
    col(k) = eigen_pair_sum(lam, d) / (n * (n - 1.0));
  }
}

template <typename Mat>
void grad_column_rect_kurtosis(const MatrixStack& y, const Mat& x,
                               Eigen::Ref<VectorXd> col) {
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(x.cols());
  const double ratio = 1.0 + n / m;
  Mat gram = x * x.adjoint();
  double tr_g = gram.real().trace();
  double kurt = gram.squaredNorm() / n - ratio * (tr_g / n) * (tr_g / n);
  double s = sgn(kurt);
  for (int k = 0; k < y.count(); ++k) {
    Mat yk;
    if constexpr (std::is_same_v<Mat, MatrixXcd>)
      yk = y.cplx(k);
    else
      yk = y.real(k);
    Mat p = yk * x.adjoint();
    double t1 = std::real(p.cwiseProduct(gram.transpose()).sum());
    double t2 = std::real(p.trace());
    col(k) = -s * (4.0 / n * t1 - ratio * 4.0 / (n * n) * tr_g * t2);
  }
}

template <typename Mat>
void grad_column_rect_entropy(const MatrixStack& y, const Mat& x,
                              Eigen::Ref<VectorXd> col) {
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(x.cols());
  const double alpha = n / (n + m);
  const double beta = m / (n + m);
  Mat gram = x * x.adjoint();
  VectorXd lam;
  Mat v;
  if constexpr (std::is_same_v<Mat, MatrixXcd>)
    detail::herm_eig(gram, lam, v);
  else
    detail::sym_eig(gram, lam, v);
  double lmax = lam.maxCoeff();
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) <= 0.0 || lam(i) < 1e-14 * std::max(1.0, lmax))
      throw DegenerateSpectrumError(
          "rectangular entropy gradient: zero eigenvalue of XX^H");
  VectorXd d(lam.size());
  for (int k = 0; k < y.count(); ++k) {
    Mat yk;
    if constexpr (std::is_same_v<Mat, MatrixXcd>)
      yk = y.cplx(k);
    else
      yk = y.real(k);
    Mat p = yk * x.adjoint();
    Mat b = p * v;
    // d_i = v_i^H (P + P^H) v_i = 2 Re(v_i^H P v_i)
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      d(i) = 2.0 * std::real(v.col(i).dot(b.col(i)));
    double pair = n >= 2 ? alpha * alpha * eigen_pair_sum(lam, d) / (n * (n - 1.0))
                         : 0.0;
    col(k) = pair + (beta - alpha) * alpha / n * (d.array() / lam.array()).sum();
  }
}

void grad_column_scalar(ObjectiveKind kind, const MatrixStack& y,
                        const MatrixXd& x, Eigen::Ref<VectorXd> col) {
  auto xv = as_vector(x).array();
  const double t = static_cast<double>(xv.size());
  double m2 = xv.square().mean();
  double m4 = xv.square().square().mean();
  double c4 = m4 - 3.0 * m2 * m2;
  VectorXd x3 = xv.cube().matrix() / t;
  VectorXd x1 = xv.matrix() / t;
  for (int k = 0; k < y.count(); ++k) {
    auto yv = as_vector(y.real(k));
    double dm4 = 4.0 * x3.dot(yv);
    double dm2 = 2.0 * x1.dot(yv);
    double dc4 = dm4 - 6.0 * m2 * dm2;
    if (kind == ObjectiveKind::ScalarKurtosis) {
      col(k) = -sgn(c4) * dc4;
    } else {
      double m3 = xv.cube().mean();
      double dm3 = 3.0 * (xv.square().matrix() / t).dot(yv);
      col(k) = -(m3 * dm3 / 6.0 + c4 * dc4 / 24.0);
    }
  }
}

// --- cached evaluators ------------------------------------------------------

// Self-adjoint kurtosis as a quartic in W: caches T2(i,j) = Tr(Y_i Y_j) and
// T4(i,j,k,l) = Tr(Y_i Y_j Y_k Y_l).
class SaKurtosisCache : public ContrastEvaluator {
 public:
  explicit SaKurtosisCache(const MatrixStack& y)
      : s_(y.count()), n_(static_cast<double>(y.rows())) {
    std::vector<std::vector<MatrixXd>> prod(s_, std::vector<MatrixXd>(s_));
    t2_.resize(s_, s_);
    for (int i = 0; i < s_; ++i)
      for (int j = i; j < s_; ++j) {
        prod[i][j].noalias() = y.real(i) * y.real(j);
        if (j > i) prod[j][i] = prod[i][j].transpose();
        t2_(i, j) = t2_(j, i) = y.real(i).cwiseProduct(y.real(j)).sum();
      }
    t4_.resize(static_cast<size_t>(s_) * s_ * s_ * s_);
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j)
        for (int k = 0; k < s_; ++k)
          for (int l = 0; l < s_; ++l)
            t4(i, j, k, l) =
                prod[i][j].cwiseProduct(prod[k][l].transpose()).sum();
  }

  double value(const MatrixXd& w) const override {
    double total = 0.0;
    for (int l = 0; l < s_; ++l) total -= std::abs(kurt(w.col(l)));
    return total;
  }

  MatrixXd gradient(const MatrixXd& w) const override {
    MatrixXd g(s_, s_);
    for (int l = 0; l < s_; ++l) {
      VectorXd wl = w.col(l);
      double m2 = wl.dot(t2_ * wl);
      double s = sgn(kurt(wl));
      VectorXd u = t2_ * wl;
      for (int k = 0; k < s_; ++k) {
        double t = 0.0;
        for (int i = 0; i < s_; ++i)
          for (int j = 0; j < s_; ++j)
            for (int q = 0; q < s_; ++q)
              t += wl(i) * wl(j) * wl(q) * t4c(k, i, j, q);
        g(k, l) = -s * (4.0 / n_ * t - 8.0 / (n_ * n_) * m2 * u(k));
      }
    }
    return g;
  }

 private:
  double& t4(int i, int j, int k, int l) {
    return t4_[((static_cast<size_t>(i) * s_ + j) * s_ + k) * s_ + l];
  }
  double t4c(int i, int j, int k, int l) const {
    return t4_[((static_cast<size_t>(i) * s_ + j) * s_ + k) * s_ + l];
  }
  double kurt(const VectorXd& wl) const {
    double m2 = wl.dot(t2_ * wl);
    double m4 = 0.0;
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j)
        for (int k = 0; k < s_; ++k)
          for (int l = 0; l < s_; ++l)
            m4 += wl(i) * wl(j) * wl(k) * wl(l) * t4c(i, j, k, l);
    return m4 / n_ - 2.0 * (m2 / n_) * (m2 / n_);
  }

  int s_;
  double n_;
  MatrixXd t2_;
  std::vector<double> t4_;
};

// Rectangular kurtosis over Gram products: caches T1(i,j) = Tr(Y_i Y_j^H)
// and T4(i,j,k,l) = Tr(Y_i Y_j^H Y_k Y_l^H). Complex traces keep their phase;
// the assembled statistic is real because XX^H is Hermitian.
template <typename Scalar>
class RectKurtosisCache : public ContrastEvaluator {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

 public:
  explicit RectKurtosisCache(const MatrixStack& y)
      : s_(y.count()),
        n_(static_cast<double>(y.rows())),
        ratio_(1.0 + static_cast<double>(y.rows()) / static_cast<double>(y.cols())) {
    std::vector<std::vector<Mat>> prod(s_, std::vector<Mat>(s_));
    for (int i = 0; i < s_; ++i)
      for (int j = i; j < s_; ++j) {
        prod[i][j].noalias() = component(y, i) * component(y, j).adjoint();
        if (j > i) prod[j][i] = prod[i][j].adjoint();
      }
    t1_.resize(s_, s_);
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j) t1_(i, j) = prod[i][j].trace();
    t4_.resize(static_cast<size_t>(s_) * s_ * s_ * s_);
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j)
        for (int k = 0; k < s_; ++k)
          for (int l = 0; l < s_; ++l)
            t4_[flat(i, j, k, l)] =
                prod[i][j].cwiseProduct(prod[k][l].transpose()).sum();
  }

  double value(const MatrixXd& w) const override {
    double total = 0.0;
    for (int l = 0; l < s_; ++l) total -= std::abs(kurt(w.col(l)));
    return total;
  }

  MatrixXd gradient(const MatrixXd& w) const override {
    MatrixXd g(s_, s_);
    for (int l = 0; l < s_; ++l) {
      VectorXd wl = w.col(l);
      double tr_g = 0.0;
      for (int i = 0; i < s_; ++i)
        for (int j = 0; j < s_; ++j)
          tr_g += wl(i) * wl(j) * std::real(t1_(i, j));
      double s = sgn(kurt(wl));
      for (int k = 0; k < s_; ++k) {
        Scalar a{};
        for (int i = 0; i < s_; ++i)
          for (int j = 0; j < s_; ++j)
            for (int q = 0; q < s_; ++q)
              a += wl(i) * wl(j) * wl(q) * t4_[flat(k, i, j, q)];
        Scalar b{};
        for (int i = 0; i < s_; ++i) b += wl(i) * t1_(k, i);
        g(k, l) = -s * (4.0 / n_ * std::real(a) -
                        ratio_ * 4.0 / (n_ * n_) * tr_g * std::real(b));
      }
    }
    return g;
  }

 private:
  static const auto& component(const MatrixStack& y, int i) {
    if constexpr (std::is_same_v<Scalar, std::complex<double>>)
      return y.cplx(i);
    else
      return y.real(i);
  }
  size_t flat(int i, int j, int k, int l) const {
    return ((static_cast<size_t>(i) * s_ + j) * s_ + k) * s_ + l;
  }
  double kurt(const VectorXd& wl) const {
    Scalar g1{}, g2{};
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j) g1 += wl(i) * wl(j) * t1_(i, j);
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j)
        for (int k = 0; k < s_; ++k)
          for (int l = 0; l < s_; ++l)
            g2 += wl(i) * wl(j) * wl(k) * wl(l) * t4_[flat(i, j, k, l)];
    double tr_g = std::real(g1);
    return std::real(g2) / n_ - ratio_ * (tr_g / n_) * (tr_g / n_);
  }

  int s_;
  double n_;
  double ratio_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> t1_;
  std::vector<Scalar> t4_;
};

// Classical moments of the vectorized components up to order four.
class ScalarMomentCache : public ContrastEvaluator {
 public:
  ScalarMomentCache(ObjectiveKind kind, const MatrixStack& y)
      : kind_(kind), s_(y.count()) {
    std::vector<Eigen::ArrayXd> v(s_);
    for (int i = 0; i < s_; ++i) v[i] = as_vector(y.real(i)).array();
    m2_.assign(static_cast<size_t>(s_) * s_, 0.0);
    m3_.assign(static_cast<size_t>(s_) * s_ * s_, 0.0);
    m4_.assign(static_cast<size_t>(s_) * s_ * s_ * s_, 0.0);
    for (int i = 0; i < s_; ++i)
      for (int j = i; j < s_; ++j) {
        Eigen::ArrayXd vij = v[i] * v[j];
        m2_[i * s_ + j] = m2_[j * s_ + i] = vij.mean();
        for (int k = j; k < s_; ++k) {
          Eigen::ArrayXd vijk = vij * v[k];
          set_sym3(i, j, k, vijk.mean());
          for (int l = k; l < s_; ++l) set_sym4(i, j, k, l, (vijk * v[l]).mean());
        }
      }
  }

  double value(const MatrixXd& w) const override {
    double total = 0.0;
    for (int l = 0; l < s_; ++l) {
      auto [m2, m3, m4] = moments(w.col(l));
      double c4 = m4 - 3.0 * m2 * m2;
      if (kind_ == ObjectiveKind::ScalarKurtosis)
        total -= std::abs(c4);
      else
        total -= m3 * m3 / 12.0 + c4 * c4 / 48.0;
    }
    return total;
  }

  MatrixXd gradient(const MatrixXd& w) const override {
    MatrixXd g(s_, s_);
    for (int l = 0; l < s_; ++l) {
      VectorXd wl = w.col(l);
      auto [m2, m3, m4] = moments(wl);
      double c4 = m4 - 3.0 * m2 * m2;
      for (int k = 0; k < s_; ++k) {
        double dm2 = 0.0, dm3 = 0.0, dm4 = 0.0;
        for (int i = 0; i < s_; ++i) {
          dm2 += wl(i) * m2_[k * s_ + i];
          for (int j = 0; j < s_; ++j) {
            dm3 += wl(i) * wl(j) * m3_[(k * s_ + i) * s_ + j];
            for (int q = 0; q < s_; ++q)
              dm4 += wl(i) * wl(j) * wl(q) *
                     m4_[((static_cast<size_t>(k) * s_ + i) * s_ + j) * s_ + q];
          }
        }
        dm2 *= 2.0;
        dm3 *= 3.0;
        dm4 *= 4.0;
        double dc4 = dm4 - 6.0 * m2 * dm2;
        if (kind_ == ObjectiveKind::ScalarKurtosis)
          g(k, l) = -sgn(c4) * dc4;
        else
          g(k, l) = -(m3 * dm3 / 6.0 + c4 * dc4 / 24.0);
      }
    }
    return g;
  }

 private:
  void set_sym3(int i, int j, int k, double v) {
    int idx[3] = {i, j, k};
    std::sort(idx, idx + 3);
    do {
      m3_[(static_cast<size_t>(idx[0]) * s_ + idx[1]) * s_ + idx[2]] = v;
    } while (std::next_permutation(idx, idx + 3));
  }
  void set_sym4(int i, int j, int k, int l, double v) {
    int idx[4] = {i, j, k, l};
    std::sort(idx, idx + 4);
    do {
      m4_[((static_cast<size_t>(idx[0]) * s_ + idx[1]) * s_ + idx[2]) * s_ +
          idx[3]] = v;
    } while (std::next_permutation(idx, idx + 4));
  }
  std::tuple<double, double, double> moments(const VectorXd& wl) const {
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j) {
        m2 += wl(i) * wl(j) * m2_[i * s_ + j];
        for (int k = 0; k < s_; ++k) {
          m3 += wl(i) * wl(j) * wl(k) * m3_[(i * s_ + j) * s_ + k];
          for (int l = 0; l < s_; ++l)
            m4 += wl(i) * wl(j) * wl(k) * wl(l) *
                  m4_[((static_cast<size_t>(i) * s_ + j) * s_ + k) * s_ + l];
        }
      }
    return {m2, m3, m4};
  }

  ObjectiveKind kind_;
  int s_;
  std::vector<double> m2_, m3_, m4_;
};

// Entropy objectives have no polynomial structure; evaluate directly.
class EntropyDirect : public ContrastEvaluator {
 public:
  EntropyDirect(ObjectiveKind kind, MatrixStack y)
      : kind_(kind), y_(std::move(y)) {}

  double value(const MatrixXd& w) const override {
    MatrixStack x = y_.linear_combination(w.transpose());
    double total = 0.0;
    for (int i = 0; i < x.count(); ++i) total += component_contrast(kind_, x, i);
    return total;
  }

  MatrixXd gradient(const MatrixXd& w) const override {
    MatrixStack x = y_.linear_combination(w.transpose());
    MatrixXd g(y_.count(), y_.count());
    for (int l = 0; l < x.count(); ++l) {
      if (kind_ == ObjectiveKind::SaEntropy) {
        grad_column_sa_entropy(y_, x.real(l), g.col(l));
      } else if (y_.is_complex()) {
        grad_column_rect_entropy<MatrixXcd>(y_, x.cplx(l), g.col(l));
      } else {
        grad_column_rect_entropy<MatrixXd>(y_, x.real(l), g.col(l));
      }
    }
    return g;
  }

 private:
  ObjectiveKind kind_;
  MatrixStack y_;
};

MatrixXd qr_orthonormalize(const MatrixXd& b) {
  Eigen::HouseholderQR<MatrixXd> qr(b);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(b.rows(), b.cols());
  VectorXd diag = qr.matrixQR().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (diag(i) < 0) q.col(i) = -q.col(i);
  return q;
}

}  // namespace

double objective_value(ObjectiveKind kind, const MatrixXd& w,
                       const MatrixStack& y) {
  validate_kind(kind, y);
  if (w.rows() != y.count() || w.cols() != y.count())
    throw DimensionError("objective_value: W must be s x s");
  MatrixStack x = y.linear_combination(w.transpose());
  double total = 0.0;
  for (int i = 0; i < x.count(); ++i) total += component_contrast(kind, x, i);
  return total;
}

MatrixXd euclidean_gradient(ObjectiveKind kind, const MatrixXd& w,
                            const MatrixStack& y) {
  validate_kind(kind, y);
  if (w.rows() != y.count() || w.cols() != y.count())
    throw DimensionError("euclidean_gradient: W must be s x s");
  MatrixStack x = y.linear_combination(w.transpose());
  MatrixXd g(y.count(), y.count());
  for (int l = 0; l < x.count(); ++l) {
    switch (kind) {
      case ObjectiveKind::SaKurtosis:
        grad_column_sa_kurtosis(y, x.real(l), g.col(l));
        break;
      case ObjectiveKind::SaEntropy:
        grad_column_sa_entropy(y, x.real(l), g.col(l));
        break;
      case ObjectiveKind::RectKurtosis:
        if (y.is_complex())
          grad_column_rect_kurtosis<MatrixXcd>(y, x.cplx(l), g.col(l));
        else
          grad_column_rect_kurtosis<MatrixXd>(y, x.real(l), g.col(l));
        break;
      case ObjectiveKind::RectEntropy:
        if (y.is_complex())
          grad_column_rect_entropy<MatrixXcd>(y, x.cplx(l), g.col(l));
        else
          grad_column_rect_entropy<MatrixXd>(y, x.real(l), g.col(l));
        break;
      case ObjectiveKind::ScalarKurtosis:
      case ObjectiveKind::ScalarNegentropy:
        grad_column_scalar(kind, y, x.real(l), g.col(l));
        break;
    }
  }
  return g;
}

MatrixXd riemannian_step(const MatrixXd& w, const MatrixXd& g, double step) {
  MatrixXd wg = w.transpose() * g;
  MatrixXd r = g - w * (0.5 * (wg + wg.transpose()));
  return qr_orthonormalize(w - step * r);
}

std::unique_ptr<ContrastEvaluator> make_contrast_evaluator(ObjectiveKind kind,
                                                           const MatrixStack& y) {
  validate_kind(kind, y);
  switch (kind) {
    case ObjectiveKind::SaKurtosis:
      return std::make_unique<SaKurtosisCache>(y);
    case ObjectiveKind::RectKurtosis:
      if (y.is_complex())
        return std::make_unique<RectKurtosisCache<std::complex<double>>>(y);
      return std::make_unique<RectKurtosisCache<double>>(y);
    case ObjectiveKind::ScalarKurtosis:
    case ObjectiveKind::ScalarNegentropy:
      return std::make_unique<ScalarMomentCache>(kind, y);
    case ObjectiveKind::SaEntropy:
    case ObjectiveKind::RectEntropy:
      return std::make_unique<EntropyDirect>(kind, y);
  }
  throw Error("unreachable objective kind");
}

Eigen::MatrixXd random_orthogonal(int s, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd g(s, s);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i) g(i, j) = rng.gaussian();
  return qr_orthonormalize(g);
}

namespace {

constexpr double kArmijoC = 1e-4;
constexpr double kMinStep = 1e-14;

struct DescentResult {
  MatrixXd w;
  double f = 0.0;
  OptimizerTrace trace;
};

DescentResult descend(const ContrastEvaluator& eval, MatrixXd w0, double f0,
                      const OptimizerConfig& cfg) {
  DescentResult res{std::move(w0), f0, {}};
  res.trace.objective_history.push_back(f0);
  // Each search starts near the last accepted step (capped at initial_step),
  // so the backtracking work per iteration stays bounded.
  double start_step = cfg.initial_step;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    MatrixXd g;
    try {
      g = eval.gradient(res.w);
    } catch (const DegenerateSpectrumError&) {
      break;  // spectrum collapsed exactly at the iterate; keep best point
    }
    MatrixXd wg = res.w.transpose() * g;
    MatrixXd r = g - res.w * (0.5 * (wg + wg.transpose()));
    double gnorm = r.norm();
    res.trace.final_grad_norm = gnorm;
    if (gnorm < cfg.grad_tol) {
      res.trace.converged = true;
      break;
    }
    bool accepted = false;
    for (double step = start_step; step >= kMinStep; step *= 0.5) {
      MatrixXd w_try = qr_orthonormalize(res.w - step * r);
      double f_try;
      try {
        f_try = eval.value(w_try);
      } catch (const DegenerateSpectrumError&) {
        continue;  // reject and halve
      }
      if (f_try <= res.f - kArmijoC * step * gnorm * gnorm) {
        res.w = std::move(w_try);
        res.f = f_try;
        start_step = std::min(cfg.initial_step, 4.0 * step);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no descent at machine precision
    ++res.trace.iterations;
    res.trace.objective_history.push_back(res.f);
  }
  return res;
}

}  // namespace

std::pair<MatrixXd, OptimizerTrace> optimize(ObjectiveKind kind,
                                             const MatrixStack& y,
                                             const OptimizerConfig& cfg) {
  if (cfg.max_iters < 1 || cfg.grad_tol <= 0.0 || cfg.initial_step <= 0.0 ||
      cfg.restarts < 1)
    throw Error("optimize: invalid optimizer configuration");
  validate_kind(kind, y);
  const int s = y.count();
  if (s == 1) {
    // O(1) = {+1, -1} and every contrast is sign-invariant.
    MatrixXd w = MatrixXd::Ones(1, 1);
    OptimizerTrace trace;
    trace.objective_history.push_back(objective_value(kind, w, y));
    trace.converged = true;
    return {w, trace};
  }
  if (cfg.warm_start &&
      (cfg.warm_start->rows() != s || cfg.warm_start->cols() != s))
    throw DimensionError("optimize: warm start must be s x s");

  auto eval = make_contrast_evaluator(kind, y);
  bool have_best = false;
  DescentResult best;
  for (int r = 0; r < cfg.restarts; ++r) {
    MatrixXd w0;
    if (r == 0)
      w0 = cfg.warm_start ? *cfg.warm_start : MatrixXd::Identity(s, s);
    else
      w0 = random_orthogonal(s, Rng::splitmix64(Rng::splitmix64(cfg.rng_seed) +
                                                static_cast<std::uint64_t>(r)));
    double f0;
    try {
      f0 = eval->value(w0);
    } catch (const DegenerateSpectrumError&) {
      continue;  // dead initial point; try the next restart
    }
    DescentResult res = descend(*eval, std::move(w0), f0, cfg);
    if (!have_best || res.f < best.f) {
      best = std::move(res);
      have_best = true;
    }
  }
  if (!have_best)
    throw DegenerateSpectrumError(
        "optimize: every restart started on a degenerate spectrum");
  return {best.w, best.trace};
}

}  // namespace freeunmix
