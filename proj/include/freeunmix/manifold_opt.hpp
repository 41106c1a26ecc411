#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "freeunmix/matrix_stack.hpp"

namespace freeunmix {

/// Contrast objective minimized over the orthogonal group. Matrix kinds use
/// the free statistics of the stack components, scalar kinds the classical
/// statistics of the vectorized components. In every case lower is better:
/// kurtosis kinds score -|k4|, entropy kinds score the (neg)entropy itself.
enum class ObjectiveKind {
  SaKurtosis,
  SaEntropy,
  RectKurtosis,
  RectEntropy,
  ScalarKurtosis,
  ScalarNegentropy,
};

const char* to_string(ObjectiveKind kind);
bool is_kurtosis_kind(ObjectiveKind kind);
bool is_matrix_kind(ObjectiveKind kind);

struct OptimizerConfig {
  int max_iters = 1000;
  double grad_tol = 1e-8;
  double initial_step = 1.0;
  int restarts = 5;  // identity init plus restarts-1 random orthogonal inits
  std::uint64_t rng_seed = 0;
  /// Optional initial point replacing the identity init of restart 0.
  std::optional<Eigen::MatrixXd> warm_start;
};

struct OptimizerTrace {
  int iterations = 0;
  std::vector<double> objective_history;  // nonincreasing along accepted steps
  double final_grad_norm = 0.0;
  bool converged = false;
};

/// sum_l Fhat(X_l) with X_l = sum_j W(j,l) Y_j. Propagates
/// DegenerateSpectrumError for entropy kinds.
double objective_value(ObjectiveKind kind, const Eigen::MatrixXd& w,
                       const MatrixStack& y);

/// Matrix of partials d objective / d W(k,l), closed form per kind.
Eigen::MatrixXd euclidean_gradient(ObjectiveKind kind, const Eigen::MatrixXd& w,
                                   const MatrixStack& y);

/// One projected step: QR retraction of W - step * P(G) where
/// P(G) = G - W sym(W^T G) is the tangent-space projection. The R diagonal is
/// sign-fixed, so the result is orthogonal to machine precision and the map
/// is deterministic.
Eigen::MatrixXd riemannian_step(const Eigen::MatrixXd& w,
                                const Eigen::MatrixXd& g, double step);

/// Minimizes the contrast over O(s) by projected gradient descent with Armijo
/// backtracking (c = 1e-4, halving, minimum step 1e-14) and the configured
/// restarts; returns the best iterate over all restarts (ties broken by
/// lowest restart index). Entropy steps that land on a degenerate spectrum
/// are rejected by the line search.
std::pair<Eigen::MatrixXd, OptimizerTrace> optimize(ObjectiveKind kind,
                                                    const MatrixStack& y,
                                                    const OptimizerConfig& cfg);

/// Evaluation engine behind optimize(). Kurtosis and scalar objectives are
/// polynomials in W once the mixed traces / moments of the stack are cached,
/// so construction does the O(s^2) matrix products and every value() /
/// gradient() afterwards is O(s^4) scalar work. Entropy kinds evaluate
/// directly. Values agree with objective_value / euclidean_gradient.
class ContrastEvaluator {
 public:
  virtual ~ContrastEvaluator() = default;
  virtual double value(const Eigen::MatrixXd& w) const = 0;
  virtual Eigen::MatrixXd gradient(const Eigen::MatrixXd& w) const = 0;
};

std::unique_ptr<ContrastEvaluator> make_contrast_evaluator(ObjectiveKind kind,
                                                           const MatrixStack& y);

/// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the R
/// diagonal sign-fixed.
Eigen::MatrixXd random_orthogonal(int s, std::uint64_t seed);

}  // namespace freeunmix
