#pragma once

#include <Eigen/Dense>
#include <vector>

#include "freeunmix/embeddings.hpp"
#include "freeunmix/manifold_opt.hpp"
#include "freeunmix/matrix_stack.hpp"

namespace freeunmix {

/// Output of a free/independent component factorization Z = (Ahat kron I) Xhat.
/// Components are sorted by contrast (|k4| descending for kurtosis kinds,
/// entropy ascending) with the columns of Ahat permuted alongside, so the
/// reconstruction identity always holds. statistic_per_component holds the
/// raw per-component statistic in the sorted order. identifiability_warning
/// is set when two or more components look near-semicircular / near-free-
/// Poisson (|k4| of the centered, unit-normalized component below 10/N).
struct FactorizationResult {
  Eigen::MatrixXd mixing_estimate;
  MatrixStack components;
  Eigen::VectorXd statistic_per_component;
  ObjectiveKind objective_kind = ObjectiveKind::SaKurtosis;
  OptimizerTrace trace;
  bool identifiability_warning = false;
  /// The optimal orthogonal factor (after sorting), with Ahat = U Sigma U^T W.
  Eigen::MatrixXd orthogonal_factor;
};

/// Free Component Factorization: whiten, minimize the matrix contrast over
/// O(s), then Ahat = U Sigma U^T What and Xhat = (Ahat^-1 kron I) Z.
/// Requires a matrix objective kind matching the stack kind.
FactorizationResult fcf(const MatrixStack& z, ObjectiveKind kind,
                        const OptimizerConfig& cfg);

/// Overdetermined variant: p = count(Z) mixtures of s < p sources. Whitens to
/// rank s; Ahat is p x s and Xhat is the least-squares unmixing.
FactorizationResult fcf_overdetermined(const MatrixStack& z, int s,
                                       ObjectiveKind kind,
                                       const OptimizerConfig& cfg);

/// Independent Component Factorization baseline: vectorized whitening plus a
/// scalar contrast (classical kurtosis or negentropy) over O(s).
FactorizationResult icf(const MatrixStack& z, ObjectiveKind kind,
                        const OptimizerConfig& cfg);

struct EmbeddedUnmixResult {
  Eigen::MatrixXd mixing_estimate;
  std::vector<Eigen::VectorXd> signals;  // unmixed raw signals, sorted order
  FactorizationResult embedded;
};

/// Estimates the mixing matrix on the embedded stack, then unmixes the raw
/// signal rows with Ahat^-1 (valid because the embedding is linear).
EmbeddedUnmixResult unmix_via_embedding(const std::vector<Eigen::VectorXd>& signals,
                                        const EmbeddingSpec& spec,
                                        ObjectiveKind kind,
                                        const OptimizerConfig& cfg);

}  // namespace freeunmix
