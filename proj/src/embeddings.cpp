#include "freeunmix/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace freeunmix {

namespace {

// Uniform size-k subset of {0, ..., total-1} via partial Fisher-Yates,
// returned sorted.
std::vector<long> draw_zero_set(long total, long k, Rng& rng) {
  std::vector<long> idx(total);
  std::iota(idx.begin(), idx.end(), 0L);
  for (long i = 0; i < k; ++i) {
    long j = i + static_cast<long>(rng.uniform() * static_cast<double>(total - i));
    if (j >= total) j = total - 1;
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Scatter vec(Z) into the packing slots, skipping the zero positions.
Eigen::VectorXd pack(const Eigen::MatrixXd& z, long slots,
                     const std::vector<long>& zeros) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(slots);
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), z.size());
  size_t zi = 0;
  long src = 0;
  for (long t = 0; t < slots; ++t) {
    if (zi < zeros.size() && zeros[zi] == t) {
      ++zi;
      continue;
    }
    out(t) = zv(src++);
  }
  if (src != z.size())
    throw DimensionError("embedding: packing slots do not match input size");
  return out;
}

Eigen::VectorXcd pack(const Eigen::MatrixXcd& z, long slots,
                      const std::vector<long>& zeros) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(slots);
  Eigen::Map<const Eigen::VectorXcd> zv(z.data(), z.size());
  size_t zi = 0;
  long src = 0;
  for (long t = 0; t < slots; ++t) {
    if (zi < zeros.size() && zeros[zi] == t) {
      ++zi;
      continue;
    }
    out(t) = zv(src++);
  }
  if (src != z.size())
    throw DimensionError("embedding: packing slots do not match input size");
  return out;
}

// Strict upper triangle filled column-major: slot t -> (i, j), j > i.
Eigen::MatrixXd unpack_symmetric(const Eigen::VectorXd& v, int dim) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(dim, dim);
  long t = 0;
  for (int j = 1; j < dim; ++j)
    for (int i = 0; i < j; ++i) u(i, j) = v(t++);
  return u + u.transpose();
}

void validate_packing_spec(const EmbeddingSpec& spec, long input_elems) {
  long slots = spec.kind == EmbeddingKind::Symmetric
                   ? static_cast<long>(spec.target_rows) *
                         (spec.target_rows - 1) / 2
                   : static_cast<long>(spec.target_rows) * spec.target_cols;
  if (slots < input_elems)
    throw DimensionError("embedding target too small for the input");
  if (static_cast<long>(spec.zero_positions.size()) != slots - input_elems)
    throw DimensionError("embedding zero set size does not match capacity");
}

}  // namespace

EmbeddingSpec symmetric_embedding_spec(long input_elems, int target_dim,
                                       Rng& rng) {
  long slots = static_cast<long>(target_dim) * (target_dim - 1) / 2;
  if (target_dim < 2 || slots < input_elems)
    throw DimensionError("symmetric embedding: target dimension too small");
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::Symmetric;
  spec.target_rows = spec.target_cols = target_dim;
  spec.zero_positions = draw_zero_set(slots, slots - input_elems, rng);
  return spec;
}

EmbeddingSpec rectangular_embedding_spec(long input_elems, int target_rows,
                                         int target_cols, Rng& rng) {
  long slots = static_cast<long>(target_rows) * target_cols;
  if (target_rows < 1 || target_cols < 1 || slots < input_elems)
    throw DimensionError("rectangular embedding: target dimensions too small");
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::Rectangular;
  spec.target_rows = target_rows;
  spec.target_cols = target_cols;
  spec.zero_positions = draw_zero_set(slots, slots - input_elems, rng);
  return spec;
}

EmbeddingSpec spectrogram_embedding_spec(int window_len, int hop, int dft_len) {
  if (!(hop >= 1 && hop <= window_len && window_len <= dft_len))
    throw DimensionError("spectrogram embedding requires hop <= window <= dft");
  EmbeddingSpec spec;
  spec.kind = EmbeddingKind::Spectrogram;
  spec.window_len = window_len;
  spec.hop = hop;
  spec.dft_len = dft_len;
  return spec;
}

Eigen::MatrixXcd stft(const Eigen::VectorXd& x, int window_len, int hop,
                      int dft_len) {
  if (window_len < 2 || hop < 1 || hop > window_len || window_len > dft_len)
    throw DimensionError("stft: require 2 <= hop <= window_len <= dft_len");
  if (x.size() < window_len)
    throw DimensionError("stft: signal shorter than the window");
  const int frames =
      static_cast<int>((x.size() - window_len) / hop) + 1;
  const int bins = dft_len / 2 + 1;

  Eigen::VectorXd w(window_len);
  for (int n = 0; n < window_len; ++n)
    w(n) = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (window_len - 1));

  Eigen::MatrixXcd basis(bins, window_len);
  for (int k = 0; k < bins; ++k)
    for (int n = 0; n < window_len; ++n)
      basis(k, n) = w(n) * std::polar(1.0, -2.0 * M_PI * k * n / dft_len);

  Eigen::MatrixXcd framed(window_len, frames);
  for (int t = 0; t < frames; ++t)
    framed.col(t) =
        x.segment(static_cast<Eigen::Index>(t) * hop, window_len)
            .cast<std::complex<double>>();
  return basis * framed;
}

MatrixStack embed(const MatrixStack& z, const EmbeddingSpec& spec) {
  const int s = z.count();
  switch (spec.kind) {
    case EmbeddingKind::Symmetric: {
      if (z.is_complex())
        throw DimensionError("symmetric embedding requires real input");
      validate_packing_spec(spec, z.rows() * z.cols());
      long slots =
          static_cast<long>(spec.target_rows) * (spec.target_rows - 1) / 2;
      std::vector<Eigen::MatrixXd> out;
      out.reserve(s);
      for (int i = 0; i < s; ++i)
        out.push_back(unpack_symmetric(
            pack(z.real(i), slots, spec.zero_positions), spec.target_rows));
      return MatrixStack::self_adjoint(std::move(out));
    }
    case EmbeddingKind::Rectangular: {
      validate_packing_spec(spec, z.rows() * z.cols());
      long slots = static_cast<long>(spec.target_rows) * spec.target_cols;
      if (z.is_complex()) {
        std::vector<Eigen::MatrixXcd> out;
        out.reserve(s);
        for (int i = 0; i < s; ++i) {
          Eigen::VectorXcd v = pack(z.cplx(i), slots, spec.zero_positions);
          out.push_back(Eigen::Map<const Eigen::MatrixXcd>(
              v.data(), spec.target_rows, spec.target_cols));
        }
        return MatrixStack::complex_rectangular(std::move(out));
      }
      std::vector<Eigen::MatrixXd> out;
      out.reserve(s);
      for (int i = 0; i < s; ++i) {
        Eigen::VectorXd v = pack(z.real(i), slots, spec.zero_positions);
        out.push_back(Eigen::Map<const Eigen::MatrixXd>(
            v.data(), spec.target_rows, spec.target_cols));
      }
      return MatrixStack::rectangular(std::move(out));
    }
    case EmbeddingKind::Spectrogram: {
      if (z.is_complex() || z.rows() != 1)
        throw DimensionError("spectrogram embedding requires 1 x T real signals");
      std::vector<Eigen::MatrixXcd> out;
      out.reserve(s);
      for (int i = 0; i < s; ++i)
        out.push_back(stft(z.real(i).row(0).transpose(), spec.window_len,
                           spec.hop, spec.dft_len));
      return MatrixStack::complex_rectangular(std::move(out));
    }
  }
  throw DimensionError("unknown embedding kind");
}

MatrixStack embed_signals(const std::vector<Eigen::VectorXd>& signals,
                          const EmbeddingSpec& spec) {
  if (signals.empty()) throw DimensionError("embed_signals: no signals");
  std::vector<Eigen::MatrixXd> rows;
  rows.reserve(signals.size());
  for (const auto& sig : signals) {
    if (sig.size() != signals.front().size())
      throw DimensionError("embed_signals: signals must have equal length");
    rows.push_back(sig.transpose());
  }
  return embed(MatrixStack::rectangular(std::move(rows)), spec);
}

}  // namespace freeunmix
