#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freeunmix/evaluation.hpp"
#include "freeunmix/factorization.hpp"

namespace freeunmix {

enum class MatrixFileFormat { Csv, F64le };

/// CSV: UTF-8, comma-separated, '.' decimal, one row per line. f64le: 16-byte
/// header of two little-endian uint64 (rows, cols) followed by row-major
/// little-endian doubles. Parse failures carry the line / byte offset.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path,
                            MatrixFileFormat format);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  MatrixFileFormat format);

/// P2/P5 portable graymap with maxval <= 65535, scaled to [0, 1].
Eigen::MatrixXd read_image_pgm(const std::filesystem::path& path);
/// Writes P5 maxval 255; values are clipped to [0, 1] before quantization.
void write_image_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// PCM16 RIFF/WAVE; stereo files yield the first channel. Samples scaled by
/// 1/32768. Returns (signal, sample_rate). Compressed/float codecs raise
/// CodecError naming the codec.
std::pair<Eigen::VectorXd, int> read_audio_wav(const std::filesystem::path& path);

struct ManifestComponent {
  std::filesystem::path path;
  std::string format;  // csv | f64le | pgm | wav (inferred from extension when empty)
};

/// Dataset description consumed by the CLI: component files with a declared
/// stack kind, an optional inline mixing matrix (when present the components
/// are ground-truth sources to mix), and a seed.
struct DatasetManifest {
  std::string kind;  // self-adjoint | rectangular | signal
  std::vector<ManifestComponent> components;
  std::optional<Eigen::MatrixXd> mixing_matrix;
  std::uint64_t seed = 0;
};

DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes Ahat and every component as csv + f64le (complex components as
/// _re/_im pairs), plus summary.json with keys {objective_kind,
/// statistic_per_component, error, iterations, converged, seed}. With
/// as_images, real components are also written as PGM.
void write_result(const FactorizationResult& result,
                  const std::filesystem::path& dir,
                  std::optional<double> error, std::uint64_t seed,
                  bool as_images = false);

void write_result(const ErrorReport& report, const std::filesystem::path& dir);

}  // namespace freeunmix
