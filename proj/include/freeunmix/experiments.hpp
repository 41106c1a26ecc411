#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "freeunmix/factorization.hpp"

namespace freeunmix {

/// Thread cap from FREEUNMIX_THREADS (0 or unset = auto).
int env_thread_cap();

/// Pins the LAPACK/BLAS backend to one thread; concurrency comes from
/// trial-level workers instead, which keeps results thread-count independent.
void use_single_threaded_blas();

/// Runs fn(0..trials-1) on up to `threads` workers (0 = auto). Results must
/// be written to per-trial slots; aggregation order is then deterministic.
void run_trials(int trials, int threads, const std::function<void(int)>& fn);

struct SeparationResult {
  std::vector<double> kurtosis_errors;
  std::vector<double> entropy_errors;
  double kurtosis_mean = 0.0;
  double entropy_mean = 0.0;
};

/// GOE + Wishart mixed by A = [0.5, 0.5; -0.5, 0.6], self-adjoint FCF with
/// both contrasts. m is the Wishart inner dimension (2n in the reference run).
SeparationResult run_sa_separation(int trials, int n, int m,
                                   std::uint64_t seed, int threads = 0);

/// DCT-spectrum (f(x) = (x-1)^4, unit-normalized) + iid Gaussian, rectangular
/// FCF with both contrasts.
SeparationResult run_rect_separation(int trials, int n, int m,
                                     std::uint64_t seed, int threads = 0);

struct DenoiseResult {
  std::vector<double> fcf_errors;
  std::vector<double> icf_errors;
  double fcf_mean = 0.0;
  double icf_mean = 0.0;
  int fcf_wins = 0;  // trials where FCF error < ICF error
};

/// Synthetic texture + matched-variance Gaussian noise mixed by the
/// orthogonal A = [sqrt2, sqrt2; -sqrt2, sqrt2]/2; kurtosis-FCF vs
/// kurtosis-ICF per trial.
DenoiseResult run_image_denoise(int trials, int rows, int cols,
                                std::uint64_t seed, int threads = 0);

struct WaveformResult {
  double fca_error = 0.0;
  double ica_error = 0.0;
};

/// Square + sawtooth waves mixed by the same orthogonal A; FCA on the
/// spectrogram embedding (Hamming 250 / hop 125 / DFT 256) vs ICA on the raw
/// samples.
WaveformResult run_waveform(int length, std::uint64_t seed);

struct ConvergenceResult {
  std::vector<int> n_values;
  // rows: kurtosis-FCF, entropy-FCF, kurtosis-ICF, entropy-ICF
  Eigen::MatrixXd mean_errors;
  Eigen::Vector4d slopes;  // fitted log-log slope of mean error vs n
};

ConvergenceResult run_convergence(const std::vector<int>& n_values,
                                  double aspect, int trials,
                                  std::uint64_t seed, int threads = 0);

struct LandscapeResult {
  Eigen::VectorXd theta;
  Eigen::VectorXd classical_kurtosis_abs;  // |c(theta)|
  Eigen::VectorXd free_kurtosis_abs;       // |kappa(theta)|
  Eigen::VectorXd entropy_score;           // E(theta); NaN where degenerate
};

/// 1-D polar sweep of the three contrast landscapes for the texture + noise
/// pair under the orthogonal mixing matrix.
LandscapeResult run_landscape(int grid_points, int rows, int cols,
                              std::uint64_t seed);

/// Shared experiment constants.
Eigen::MatrixXd sa_separation_mixing();    // [0.5, 0.5; -0.5, 0.6]
Eigen::MatrixXd orthogonal_mixing();       // [sqrt2, sqrt2; -sqrt2, sqrt2]/2

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace freeunmix
