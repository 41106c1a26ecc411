#pragma once

#include <Eigen/Dense>
#include <vector>

#include "freeunmix/errors.hpp"

namespace freeunmix {

enum class StackKind { SelfAdjoint, Rectangular, ComplexRectangular };

const char* to_string(StackKind kind);

/// Ordered array of s equally-sized N x M matrices: the Z, X, Y objects of
/// the additive mixing model. Self-adjoint stacks are real symmetric;
/// complex data lives in ComplexRectangular stacks.
class MatrixStack {
 public:
  /// Empty stack; populate through the named constructors.
  MatrixStack() = default;

  /// Validates that every matrix is square and symmetric within 1e-12
  /// relative tolerance.
  static MatrixStack self_adjoint(std::vector<Eigen::MatrixXd> mats);
  static MatrixStack rectangular(std::vector<Eigen::MatrixXd> mats);
  static MatrixStack complex_rectangular(std::vector<Eigen::MatrixXcd> mats);

  /// Stack of `count` zero matrices with the given kind and shape.
  static MatrixStack zeros(StackKind kind, int count, Eigen::Index rows,
                           Eigen::Index cols);

  StackKind kind() const { return kind_; }
  bool is_complex() const { return kind_ == StackKind::ComplexRectangular; }
  int count() const {
    return static_cast<int>(is_complex() ? cx_.size() : re_.size());
  }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  const Eigen::MatrixXd& real(int i) const { return re_.at(i); }
  Eigen::MatrixXd& real(int i) { return re_.at(i); }
  const Eigen::MatrixXcd& cplx(int i) const { return cx_.at(i); }
  Eigen::MatrixXcd& cplx(int i) { return cx_.at(i); }

  /// Component i viewed as a complex matrix regardless of storage.
  Eigen::MatrixXcd as_complex(int i) const;

  /// Stack with the same kind/shape whose component i is
  /// sum_j coeffs(i, j) * this[j]. coeffs may be rectangular (p x count).
  MatrixStack linear_combination(const Eigen::MatrixXd& coeffs) const;

  /// Components permuted so that result[i] = this[perm[i]].
  MatrixStack permuted(const std::vector<int>& perm) const;

 private:
  void check_uniform_dims() const;

  StackKind kind_ = StackKind::Rectangular;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<Eigen::MatrixXd> re_;
  std::vector<Eigen::MatrixXcd> cx_;
};

/// True when ||X - X^H||_max <= 1e-12 * max(1, ||X||_max).
bool is_hermitian(const Eigen::MatrixXd& x);
bool is_hermitian(const Eigen::MatrixXcd& x);

}  // namespace freeunmix
