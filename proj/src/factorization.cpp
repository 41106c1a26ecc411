#include "freeunmix/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "freeunmix/free_stats.hpp"
#include "freeunmix/whitening.hpp"

namespace freeunmix {

namespace {

double raw_statistic(ObjectiveKind kind, const MatrixStack& x, int i) {
  switch (kind) {
    case ObjectiveKind::SaKurtosis:
      return free_kurtosis_sa(x.real(i));
    case ObjectiveKind::SaEntropy:
      try {
        return free_entropy_sa(x.real(i));
      } catch (const DegenerateSpectrumError&) {
        return -std::numeric_limits<double>::infinity();
      }
    case ObjectiveKind::RectKurtosis:
      return x.is_complex() ? free_kurtosis_rect(x.cplx(i))
                            : free_kurtosis_rect(x.real(i));
    case ObjectiveKind::RectEntropy:
      try {
        return x.is_complex() ? free_entropy_rect(x.cplx(i))
                              : free_entropy_rect(x.real(i));
      } catch (const DegenerateSpectrumError&) {
        return -std::numeric_limits<double>::infinity();
      }
    case ObjectiveKind::ScalarKurtosis:
      return classical_kurtosis(Eigen::Map<const Eigen::VectorXd>(
          x.real(i).data(), x.real(i).size()));
    case ObjectiveKind::ScalarNegentropy:
      return negentropy_approx(Eigen::Map<const Eigen::VectorXd>(
          x.real(i).data(), x.real(i).size()));
  }
  return 0.0;
}

// Sorting key equivalent to ascending contrast F: most structured component
// first for every kind.
double sort_key(ObjectiveKind kind, double stat) {
  if (is_kurtosis_kind(kind)) return -std::abs(stat);
  if (kind == ObjectiveKind::ScalarNegentropy) return -stat;
  return stat;  // entropy kinds ascend
}

// |k4| of the centered, unit-normalized component: the scale-free quantity
// the identifiability condition speaks to.
double normalized_kurtosis(const MatrixStack& x, int i) {
  const double n = static_cast<double>(x.rows());
  if (x.kind() == StackKind::SelfAdjoint) {
    Eigen::MatrixXd c = x.real(i);
    c.diagonal().array() -= c.trace() / n;
    double scale2 = c.squaredNorm() / n;
    if (scale2 <= 0.0) return 0.0;
    return free_kurtosis_sa(Eigen::MatrixXd(c / std::sqrt(scale2)));
  }
  if (x.is_complex()) {
    Eigen::MatrixXcd c = x.cplx(i);
    c.array() -= c.mean();
    double scale2 = c.squaredNorm() / n;
    if (scale2 <= 0.0) return 0.0;
    return free_kurtosis_rect(Eigen::MatrixXcd(c / std::sqrt(scale2)));
  }
  Eigen::MatrixXd c = x.real(i);
  c.array() -= c.mean();
  double scale2 = c.squaredNorm() / n;
  if (scale2 <= 0.0) return 0.0;
  return free_kurtosis_rect(Eigen::MatrixXd(c / std::sqrt(scale2)));
}

// Sorts components, permutes mixing columns alongside, computes statistics
// and the identifiability flag; shared tail of all factorizations.
FactorizationResult assemble(ObjectiveKind kind, Eigen::MatrixXd a_hat,
                             Eigen::MatrixXd w_opt, MatrixStack x_hat,
                             OptimizerTrace trace, bool check_identifiability) {
  const int s = x_hat.count();
  Eigen::VectorXd stats(s);
  for (int i = 0; i < s; ++i) stats(i) = raw_statistic(kind, x_hat, i);

  std::vector<int> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sort_key(kind, stats(a)) < sort_key(kind, stats(b));
  });

  FactorizationResult res;
  res.objective_kind = kind;
  res.trace = std::move(trace);
  res.components = x_hat.permuted(order);
  res.mixing_estimate.resize(a_hat.rows(), s);
  res.orthogonal_factor.resize(w_opt.rows(), s);
  res.statistic_per_component.resize(s);
  for (int j = 0; j < s; ++j) {
    res.mixing_estimate.col(j) = a_hat.col(order[j]);
    res.orthogonal_factor.col(j) = w_opt.col(order[j]);
    res.statistic_per_component(j) = stats(order[j]);
  }
  if (check_identifiability) {
    const double threshold = 10.0 / static_cast<double>(x_hat.rows());
    int near_flat = 0;
    for (int i = 0; i < s; ++i)
      if (std::abs(normalized_kurtosis(res.components, i)) < threshold)
        ++near_flat;
    res.identifiability_warning = near_flat >= 2;
  }
  return res;
}

void require_matrix_kind(ObjectiveKind kind, const MatrixStack& z) {
  if (!is_matrix_kind(kind))
    throw KindMismatchError("fcf requires a matrix objective kind (use icf)");
  bool sa_kind =
      kind == ObjectiveKind::SaKurtosis || kind == ObjectiveKind::SaEntropy;
  if (sa_kind && z.kind() != StackKind::SelfAdjoint)
    throw KindMismatchError("self-adjoint objective on a non-self-adjoint stack");
  if (!sa_kind && z.kind() == StackKind::SelfAdjoint)
    throw KindMismatchError("rectangular objective on a self-adjoint stack");
}

}  // namespace

FactorizationResult fcf(const MatrixStack& z, ObjectiveKind kind,
                        const OptimizerConfig& cfg) {
  require_matrix_kind(kind, z);
  WhiteningResult wr = whiten(z);
  auto [w_opt, trace] = optimize(kind, wr.whitened, cfg);
  Eigen::MatrixXd c_half = wr.eigvecs * wr.singvals.asDiagonal() *
                           wr.eigvecs.transpose();
  Eigen::MatrixXd a_hat = c_half * w_opt;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a_hat);
  Eigen::MatrixXd unmix =
      lu.solve(Eigen::MatrixXd::Identity(z.count(), z.count()));
  MatrixStack x_hat = z.linear_combination(unmix);
  return assemble(kind, std::move(a_hat), std::move(w_opt), std::move(x_hat),
                  std::move(trace), /*check_identifiability=*/true);
}

FactorizationResult fcf_overdetermined(const MatrixStack& z, int s,
                                       ObjectiveKind kind,
                                       const OptimizerConfig& cfg) {
  require_matrix_kind(kind, z);
  if (s == z.count()) return fcf(z, kind, cfg);
  WhiteningResult wr = whiten_overdetermined(z, s);
  auto [w_opt, trace] = optimize(kind, wr.whitened, cfg);
  Eigen::MatrixXd a_hat =
      wr.eigvecs * wr.singvals.asDiagonal() * w_opt;  // p x s
  Eigen::MatrixXd unmix =
      a_hat.completeOrthogonalDecomposition().pseudoInverse();
  MatrixStack x_hat = z.linear_combination(unmix);
  return assemble(kind, std::move(a_hat), std::move(w_opt), std::move(x_hat),
                  std::move(trace), /*check_identifiability=*/true);
}

FactorizationResult icf(const MatrixStack& z, ObjectiveKind kind,
                        const OptimizerConfig& cfg) {
  if (is_matrix_kind(kind))
    throw KindMismatchError("icf requires a scalar objective kind (use fcf)");
  if (z.is_complex())
    throw KindMismatchError("icf requires a real stack");
  WhiteningResult wr = whiten_vectorized(z);
  auto [w_opt, trace] = optimize(kind, wr.whitened, cfg);
  Eigen::MatrixXd c_half = wr.eigvecs * wr.singvals.asDiagonal() *
                           wr.eigvecs.transpose();
  Eigen::MatrixXd a_hat = c_half * w_opt;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a_hat);
  Eigen::MatrixXd unmix =
      lu.solve(Eigen::MatrixXd::Identity(z.count(), z.count()));
  MatrixStack x_hat = z.linear_combination(unmix);
  return assemble(kind, std::move(a_hat), std::move(w_opt), std::move(x_hat),
                  std::move(trace), /*check_identifiability=*/false);
}

EmbeddedUnmixResult unmix_via_embedding(
    const std::vector<Eigen::VectorXd>& signals, const EmbeddingSpec& spec,
    ObjectiveKind kind, const OptimizerConfig& cfg) {
  if (signals.size() < 2)
    throw DimensionError("unmix_via_embedding: need at least two signals");
  MatrixStack embedded = embed_signals(signals, spec);
  FactorizationResult fr = fcf(embedded, kind, cfg);

  const int s = static_cast<int>(signals.size());
  Eigen::MatrixXd raw(s, signals.front().size());
  for (int i = 0; i < s; ++i) raw.row(i) = signals[i].transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(fr.mixing_estimate);
  Eigen::MatrixXd unmixed = lu.solve(raw);

  EmbeddedUnmixResult out;
  out.mixing_estimate = fr.mixing_estimate;
  out.signals.reserve(s);
  for (int i = 0; i < s; ++i) out.signals.push_back(unmixed.row(i).transpose());
  out.embedded = std::move(fr);
  return out;
}

}  // namespace freeunmix
