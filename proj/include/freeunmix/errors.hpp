#pragma once

#include <stdexcept>
#include <string>

namespace freeunmix {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape mismatch or violated structural invariant (non-square, non-Hermitian, ...).
struct DimensionError : Error {
  using Error::Error;
};

/// Eigenvalue collision or nonpositive spectrum where log-gap statistics are required.
struct DegenerateSpectrumError : Error {
  using Error::Error;
};

/// Covariance eigenvalue below the rank tolerance; carries the offending index.
struct SingularCovarianceError : Error {
  SingularCovarianceError(const std::string& what, int index)
      : Error(what), eigenvalue_index(index) {}
  int eigenvalue_index;
};

/// Fewer significant covariance eigenvalues than requested components.
struct RankError : Error {
  using Error::Error;
};

/// Malformed input file; message carries line or byte offset where known.
struct ParseError : Error {
  using Error::Error;
};

/// Recognized container but unsupported encoding (e.g. float-PCM WAV).
struct CodecError : Error {
  using Error::Error;
};

/// Objective kind incompatible with the data it was applied to.
struct KindMismatchError : Error {
  using Error::Error;
};

/// Any other numerical failure (singular mixing estimate, ...).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace freeunmix
