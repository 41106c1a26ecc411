#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "freeunmix/matrix_stack.hpp"

namespace freeunmix {

enum class EnsembleKind { Goe, Wishart, DctSpectrum, IidGaussian, ConstantImage };

/// Random-matrix ensemble description. Wishart uses cols as the inner
/// dimension (output is rows x rows). DctSpectrum builds U D V^T from
/// orthonormal DST-II / DCT-II bases with D(i,i) = spectrum_fn((i - 1/2) / N),
/// so the prescribed values are exactly the singular values.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::Goe;
  int rows = 0;
  int cols = 0;
  std::function<double(double)> spectrum_fn;  // DctSpectrum only, on (0, 1]
  std::uint64_t rng_seed = 0;
};

/// Draws one matrix. Gaussian entries are filled column-major from the
/// documented generator, so samples are bit-reproducible per seed.
///   Goe:           (G + G^T) / sqrt(2 N), G iid standard normal N x N
///   Wishart:       G G^T / M, G iid standard normal N x M
///   DctSpectrum:   deterministic U D V^T as above
///   IidGaussian:   iid standard normal N x M
///   ConstantImage: all-ones N x M
Eigen::MatrixXd sample(const EnsembleSpec& spec);

/// Z_i = sum_j A(i, j) X_j. A may be p x s for overdetermined mixing.
MatrixStack mix(const MatrixStack& x, const Eigen::MatrixXd& a);

enum class WaveKind { Square, Sawtooth, Cosine };

/// Unit-amplitude periodic test signals. Square: +1 on the first half of each
/// period; sawtooth: linear ramp -1 -> 1 over each period; cosine:
/// cos(2 pi n / period).
Eigen::VectorXd synth_waveform(WaveKind kind, int length, int period);

/// Deterministic smooth random field for the image experiments: a box-blurred
/// Gaussian field normalized to zero mean and unit variance. Entries stay
/// near-Gaussian while the singular spectrum is strongly structured, the
/// regime where the free and classical kurtosis contrasts differ most.
Eigen::MatrixXd synth_texture(int rows, int cols, std::uint64_t seed);

/// Orthonormal DST-II / DCT-II matrices used by the DctSpectrum ensemble.
Eigen::MatrixXd dst2_basis(int n);
Eigen::MatrixXd dct2_basis(int n);

}  // namespace freeunmix
