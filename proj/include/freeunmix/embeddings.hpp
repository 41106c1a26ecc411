#pragma once

#include <Eigen/Dense>
#include <vector>

#include "freeunmix/matrix_stack.hpp"
#include "freeunmix/rng.hpp"

namespace freeunmix {

enum class EmbeddingKind { Symmetric, Rectangular, Spectrogram };

/// Description of a linear matrix embedding. For the packing embeddings the
/// zero position set S is drawn once (at spec construction) and recorded, so
/// the same S applies to every component and results are reproducible.
struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::Rectangular;
  int target_rows = 0;
  int target_cols = 0;
  std::vector<long> zero_positions;  // sorted indices into the packing slots
  int window_len = 250;
  int hop = 125;
  int dft_len = 256;
};

/// Packing into the strict upper triangle of a target_dim x target_dim
/// symmetric matrix; requires target_dim (target_dim - 1) / 2 >= input_elems.
EmbeddingSpec symmetric_embedding_spec(long input_elems, int target_dim,
                                       Rng& rng);

/// Packing into a target_rows x target_cols matrix; requires
/// target_rows * target_cols >= input_elems.
EmbeddingSpec rectangular_embedding_spec(long input_elems, int target_rows,
                                         int target_cols, Rng& rng);

/// One-sided STFT embedding; requires hop <= window_len <= dft_len.
EmbeddingSpec spectrogram_embedding_spec(int window_len, int hop, int dft_len);

/// Applies the embedding to every component. Linear in the input entrywise;
/// the symmetric kind produces a self-adjoint stack (zero diagonal), the
/// spectrogram kind requires a 1 x T real stack and produces a
/// complex-rectangular stack.
MatrixStack embed(const MatrixStack& z, const EmbeddingSpec& spec);

/// Convenience wrapper: embeds equal-length signals.
MatrixStack embed_signals(const std::vector<Eigen::VectorXd>& signals,
                          const EmbeddingSpec& spec);

/// Short-time Fourier transform with a Hamming window
/// (w[n] = 0.54 - 0.46 cos(2 pi n / (window_len - 1))), one-sided bins
/// 0..dft_len/2, frame t and bin k given by
/// sum_n x[t hop + n] w[n] exp(-2 pi i k n / dft_len). Trailing samples
/// shorter than a window are dropped.
Eigen::MatrixXcd stft(const Eigen::VectorXd& x, int window_len, int hop,
                      int dft_len);

}  // namespace freeunmix
