#include "freeunmix/matrix_stack.hpp"

#include <utility>

namespace freeunmix {

const char* to_string(StackKind kind) {
  switch (kind) {
    case StackKind::SelfAdjoint:
      return "self-adjoint";
    case StackKind::Rectangular:
      return "rectangular";
    case StackKind::ComplexRectangular:
      return "complex-rectangular";
  }
  return "?";
}

namespace {

template <typename Mat>
bool hermitian_within_tol(const Mat& x) {
  if (x.rows() != x.cols()) return false;
  double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  return (x - x.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

bool is_hermitian(const Eigen::MatrixXd& x) { return hermitian_within_tol(x); }
bool is_hermitian(const Eigen::MatrixXcd& x) { return hermitian_within_tol(x); }

void MatrixStack::check_uniform_dims() const {
  auto check = [&](Eigen::Index r, Eigen::Index c) {
    if (r != rows_ || c != cols_)
      throw DimensionError("matrix stack components have differing dimensions");
  };
  for (const auto& m : re_) check(m.rows(), m.cols());
  for (const auto& m : cx_) check(m.rows(), m.cols());
}

MatrixStack MatrixStack::self_adjoint(std::vector<Eigen::MatrixXd> mats) {
  if (mats.empty()) throw DimensionError("empty matrix stack");
  MatrixStack s;
  s.kind_ = StackKind::SelfAdjoint;
  s.rows_ = mats.front().rows();
  s.cols_ = mats.front().cols();
  s.re_ = std::move(mats);
  s.check_uniform_dims();
  if (s.rows_ != s.cols_)
    throw DimensionError("self-adjoint stack requires square matrices");
  for (const auto& m : s.re_)
    if (!is_hermitian(m))
      throw DimensionError("self-adjoint stack component is not symmetric");
  return s;
}

MatrixStack MatrixStack::rectangular(std::vector<Eigen::MatrixXd> mats) {
  if (mats.empty()) throw DimensionError("empty matrix stack");
  MatrixStack s;
  s.kind_ = StackKind::Rectangular;
  s.rows_ = mats.front().rows();
  s.cols_ = mats.front().cols();
  s.re_ = std::move(mats);
  s.check_uniform_dims();
  return s;
}

MatrixStack MatrixStack::complex_rectangular(std::vector<Eigen::MatrixXcd> mats) {
  if (mats.empty()) throw DimensionError("empty matrix stack");
  MatrixStack s;
  s.kind_ = StackKind::ComplexRectangular;
  s.rows_ = mats.front().rows();
  s.cols_ = mats.front().cols();
  s.cx_ = std::move(mats);
  s.check_uniform_dims();
  return s;
}

MatrixStack MatrixStack::zeros(StackKind kind, int count, Eigen::Index rows,
                               Eigen::Index cols) {
  if (count < 1 || rows < 1 || cols < 1)
    throw DimensionError("zeros: nonpositive stack dimensions");
  MatrixStack s;
  s.kind_ = kind;
  s.rows_ = rows;
  s.cols_ = cols;
  if (kind == StackKind::ComplexRectangular) {
    s.cx_.assign(count, Eigen::MatrixXcd::Zero(rows, cols));
  } else {
    if (kind == StackKind::SelfAdjoint && rows != cols)
      throw DimensionError("self-adjoint stack requires square matrices");
    s.re_.assign(count, Eigen::MatrixXd::Zero(rows, cols));
  }
  return s;
}

Eigen::MatrixXcd MatrixStack::as_complex(int i) const {
  if (is_complex()) return cx_.at(i);
  return re_.at(i).cast<std::complex<double>>();
}

MatrixStack MatrixStack::linear_combination(const Eigen::MatrixXd& coeffs) const {
  if (coeffs.cols() != count())
    throw DimensionError("linear_combination: coefficient columns != stack count");
  MatrixStack out;
  out.kind_ = kind_;
  out.rows_ = rows_;
  out.cols_ = cols_;
  const int p = static_cast<int>(coeffs.rows());
  if (is_complex()) {
    out.cx_.reserve(p);
    for (int i = 0; i < p; ++i) {
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rows_, cols_);
      for (int j = 0; j < count(); ++j) acc.noalias() += coeffs(i, j) * cx_[j];
      out.cx_.push_back(std::move(acc));
    }
  } else {
    out.re_.reserve(p);
    for (int i = 0; i < p; ++i) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows_, cols_);
      for (int j = 0; j < count(); ++j) acc.noalias() += coeffs(i, j) * re_[j];
      out.re_.push_back(std::move(acc));
    }
  }
  return out;
}

MatrixStack MatrixStack::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != count())
    throw DimensionError("permuted: permutation size != stack count");
  MatrixStack out;
  out.kind_ = kind_;
  out.rows_ = rows_;
  out.cols_ = cols_;
  for (int idx : perm) {
    if (idx < 0 || idx >= count())
      throw DimensionError("permuted: index out of range");
    if (is_complex())
      out.cx_.push_back(cx_[idx]);
    else
      out.re_.push_back(re_[idx]);
  }
  return out;
}

}  // namespace freeunmix
