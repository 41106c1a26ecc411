#include "freeunmix/datagen.hpp"

#include <cmath>

#include "freeunmix/rng.hpp"

namespace freeunmix {

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = rng.gaussian();
  return g;
}

// Truncated box blur of half-width h along columns, renormalized at borders.
Eigen::MatrixXd box_blur_cols(const Eigen::MatrixXd& x, int h) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index lo = std::max<Eigen::Index>(0, i - h);
    Eigen::Index hi = std::min<Eigen::Index>(x.rows() - 1, i + h);
    out.row(i) = x.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd dst2_basis(int n) {
  Eigen::MatrixXd u(n, n);
  const double scale = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    double row_scale = (k == n - 1) ? scale / std::sqrt(2.0) : scale;
    for (int j = 0; j < n; ++j)
      u(k, j) = row_scale * std::sin(M_PI * (k + 1) * (2 * j + 1) / (2.0 * n));
  }
  return u;
}

Eigen::MatrixXd dct2_basis(int n) {
  Eigen::MatrixXd v(n, n);
  const double scale = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    double row_scale = (k == 0) ? scale / std::sqrt(2.0) : scale;
    for (int j = 0; j < n; ++j)
      v(k, j) = row_scale * std::cos(M_PI * k * (2 * j + 1) / (2.0 * n));
  }
  return v;
}

Eigen::MatrixXd sample(const EnsembleSpec& spec) {
  if (spec.rows < 1 || (spec.kind != EnsembleKind::Goe && spec.cols < 1))
    throw DimensionError("sample: nonpositive ensemble dimensions");
  Rng rng(spec.rng_seed);
  switch (spec.kind) {
    case EnsembleKind::Goe: {
      const int n = spec.rows;
      Eigen::MatrixXd g = gaussian_matrix(n, n, rng);
      return (g + g.transpose()) / std::sqrt(2.0 * n);
    }
    case EnsembleKind::Wishart: {
      Eigen::MatrixXd g = gaussian_matrix(spec.rows, spec.cols, rng);
      return g * g.transpose() / static_cast<double>(spec.cols);
    }
    case EnsembleKind::DctSpectrum: {
      if (!spec.spectrum_fn)
        throw Error("sample: DctSpectrum requires a spectrum function");
      if (spec.rows > spec.cols)
        throw DimensionError("sample: DctSpectrum requires rows <= cols");
      const int n = spec.rows;
      const int m = spec.cols;
      Eigen::MatrixXd u = dst2_basis(n);
      Eigen::MatrixXd v = dct2_basis(m);
      Eigen::VectorXd d(n);
      for (int i = 0; i < n; ++i) {
        d(i) = spec.spectrum_fn((i + 0.5) / n);
        if (d(i) < 0.0)
          throw Error("sample: spectrum function must be nonnegative");
      }
      return u.transpose() * d.asDiagonal() * v.topRows(n);
    }
    case EnsembleKind::IidGaussian:
      return gaussian_matrix(spec.rows, spec.cols, rng);
    case EnsembleKind::ConstantImage:
      return Eigen::MatrixXd::Ones(spec.rows, spec.cols);
  }
  throw Error("sample: unknown ensemble kind");
}

MatrixStack mix(const MatrixStack& x, const Eigen::MatrixXd& a) {
  return x.linear_combination(a);
}

Eigen::VectorXd synth_waveform(WaveKind kind, int length, int period) {
  if (length < 1 || period < 1)
    throw DimensionError("synth_waveform: length and period must be positive");
  Eigen::VectorXd x(length);
  switch (kind) {
    case WaveKind::Square:
      for (int n = 0; n < length; ++n)
        x(n) = (n % period) < (period + 1) / 2 ? 1.0 : -1.0;
      break;
    case WaveKind::Sawtooth: {
      double denom = period > 1 ? period - 1.0 : 1.0;
      for (int n = 0; n < length; ++n)
        x(n) = -1.0 + 2.0 * (n % period) / denom;
      break;
    }
    case WaveKind::Cosine:
      for (int n = 0; n < length; ++n) x(n) = std::cos(2.0 * M_PI * n / period);
      break;
  }
  return x;
}

Eigen::MatrixXd synth_texture(int rows, int cols, std::uint64_t seed) {
  if (rows < 2 || cols < 2)
    throw DimensionError("synth_texture: need at least 2 x 2");
  Rng rng(seed);
  Eigen::MatrixXd g = gaussian_matrix(rows, cols, rng);
  int h = std::max(2, std::min(rows, cols) / 32);
  Eigen::MatrixXd t = box_blur_cols(g, h);
  t = box_blur_cols(t.transpose(), h).transpose();
  t = box_blur_cols(t, h);
  t = box_blur_cols(t.transpose(), h).transpose();
  t.array() -= t.mean();
  double sd = std::sqrt(t.squaredNorm() / t.size());
  if (sd > 0) t /= sd;
  return t;
}

}  // namespace freeunmix
