#include "freeunmix/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "freeunmix/datagen.hpp"
#include "freeunmix/evaluation.hpp"
#include "freeunmix/free_stats.hpp"
#include "freeunmix/rng.hpp"
#include "freeunmix/whitening.hpp"

extern "C" void openblas_set_num_threads(int);

namespace freeunmix {

namespace {

// Trials run concurrently, so the LAPACK backend stays single-threaded.
void pin_blas_threads() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return Rng::splitmix64(Rng::splitmix64(seed) + index);
}

// Entry-mean centering plus Tr(XX^T)/N = 1 normalization, the source
// preparation used by the rectangular experiments.
Eigen::MatrixXd center_normalize(Eigen::MatrixXd x) {
  x.array() -= x.mean();
  double scale2 = x.squaredNorm() / static_cast<double>(x.rows());
  if (scale2 > 0) x /= std::sqrt(scale2);
  return x;
}

OptimizerConfig kurtosis_config(std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.rng_seed = seed;
  return cfg;
}

// Entropy runs start from the kurtosis optimum: the landscapes share their
// optima up to the N^-1 fluctuation scale, and entropy evaluations cost a
// full eigendecomposition each.
OptimizerConfig entropy_config(std::uint64_t seed, Eigen::MatrixXd warm) {
  OptimizerConfig cfg;
  cfg.rng_seed = seed;
  cfg.restarts = 1;
  cfg.max_iters = 150;
  cfg.grad_tol = 1e-4;  // far below the N^-1 statistical error floor
  cfg.warm_start = std::move(warm);
  return cfg;
}

}  // namespace

void use_single_threaded_blas() { pin_blas_threads(); }

int env_thread_cap() {
  const char* env = std::getenv("FREEUNMIX_THREADS");
  if (!env || !*env) return 0;
  int v = std::atoi(env);
  return v > 0 ? v : 0;
}

void run_trials(int trials, int threads, const std::function<void(int)>& fn) {
  pin_blas_threads();
  if (threads <= 0) {
    threads = env_thread_cap();
    if (threads <= 0)
      threads = static_cast<int>(std::thread::hardware_concurrency());
  }
  threads = std::max(1, std::min(threads, trials));
  if (threads == 1) {
    for (int t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

Eigen::MatrixXd sa_separation_mixing() {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.5, -0.5, 0.6;
  return a;
}

Eigen::MatrixXd orthogonal_mixing() {
  const double r = std::sqrt(2.0) / 2.0;
  Eigen::MatrixXd a(2, 2);
  a << r, r, -r, r;
  return a;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double lx = std::log(x[i]);
    double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SeparationResult run_sa_separation(int trials, int n, int m,
                                   std::uint64_t seed, int threads) {
  SeparationResult res;
  res.kurtosis_errors.resize(trials);
  res.entropy_errors.resize(trials);
  Eigen::MatrixXd a = sa_separation_mixing();
  run_trials(trials, threads, [&](int t) {
    std::uint64_t ts = seed + static_cast<std::uint64_t>(t);
    EnsembleSpec goe{EnsembleKind::Goe, n, n, nullptr, derive_seed(ts, 0)};
    EnsembleSpec wish{EnsembleKind::Wishart, n, m, nullptr, derive_seed(ts, 1)};
    MatrixStack x = MatrixStack::self_adjoint({sample(goe), sample(wish)});
    MatrixStack z = mix(x, a);
    FactorizationResult rk = fcf(z, ObjectiveKind::SaKurtosis, kurtosis_config(ts));
    res.kurtosis_errors[t] = unmixing_error(a, rk.mixing_estimate).error;
    FactorizationResult re =
        fcf(z, ObjectiveKind::SaEntropy, entropy_config(ts, rk.orthogonal_factor));
    res.entropy_errors[t] = unmixing_error(a, re.mixing_estimate).error;
  });
  res.kurtosis_mean = Eigen::Map<Eigen::VectorXd>(res.kurtosis_errors.data(), trials).mean();
  res.entropy_mean = Eigen::Map<Eigen::VectorXd>(res.entropy_errors.data(), trials).mean();
  return res;
}

namespace {

MatrixStack rect_sources(int n, int m, std::uint64_t trial_seed) {
  EnsembleSpec dct{EnsembleKind::DctSpectrum, n, m,
                   [](double x) { return std::pow(x - 1.0, 4.0); },
                   derive_seed(trial_seed, 0)};
  EnsembleSpec gauss{EnsembleKind::IidGaussian, n, m, nullptr,
                     derive_seed(trial_seed, 1)};
  Eigen::MatrixXd x1 = center_normalize(sample(dct));
  Eigen::MatrixXd x2 =
      center_normalize(sample(gauss) / std::sqrt(static_cast<double>(m)));
  return MatrixStack::rectangular({std::move(x1), std::move(x2)});
}

}  // namespace

SeparationResult run_rect_separation(int trials, int n, int m,
                                     std::uint64_t seed, int threads) {
  SeparationResult res;
  res.kurtosis_errors.resize(trials);
  res.entropy_errors.resize(trials);
  Eigen::MatrixXd a = sa_separation_mixing();
  run_trials(trials, threads, [&](int t) {
    std::uint64_t ts = seed + static_cast<std::uint64_t>(t);
    MatrixStack z = mix(rect_sources(n, m, ts), a);
    FactorizationResult rk =
        fcf(z, ObjectiveKind::RectKurtosis, kurtosis_config(ts));
    res.kurtosis_errors[t] = unmixing_error(a, rk.mixing_estimate).error;
    FactorizationResult re = fcf(z, ObjectiveKind::RectEntropy,
                                 entropy_config(ts, rk.orthogonal_factor));
    res.entropy_errors[t] = unmixing_error(a, re.mixing_estimate).error;
  });
  res.kurtosis_mean = Eigen::Map<Eigen::VectorXd>(res.kurtosis_errors.data(), trials).mean();
  res.entropy_mean = Eigen::Map<Eigen::VectorXd>(res.entropy_errors.data(), trials).mean();
  return res;
}

DenoiseResult run_image_denoise(int trials, int rows, int cols,
                                std::uint64_t seed, int threads) {
  DenoiseResult res;
  res.fcf_errors.resize(trials);
  res.icf_errors.resize(trials);
  Eigen::MatrixXd a = orthogonal_mixing();
  Eigen::MatrixXd image = synth_texture(rows, cols, derive_seed(seed, 9000));
  double image_sd = std::sqrt(image.squaredNorm() / image.size() -
                              image.mean() * image.mean());
  run_trials(trials, threads, [&](int t) {
    std::uint64_t ts = seed + static_cast<std::uint64_t>(t);
    EnsembleSpec gauss{EnsembleKind::IidGaussian, rows, cols, nullptr,
                       derive_seed(ts, 1)};
    Eigen::MatrixXd noise = image_sd * sample(gauss);
    MatrixStack z = mix(MatrixStack::rectangular({image, std::move(noise)}), a);
    FactorizationResult rf =
        fcf(z, ObjectiveKind::RectKurtosis, kurtosis_config(ts));
    res.fcf_errors[t] = unmixing_error(a, rf.mixing_estimate).error;
    FactorizationResult ri =
        icf(z, ObjectiveKind::ScalarKurtosis, kurtosis_config(ts));
    res.icf_errors[t] = unmixing_error(a, ri.mixing_estimate).error;
  });
  for (int t = 0; t < trials; ++t)
    if (res.fcf_errors[t] < res.icf_errors[t]) ++res.fcf_wins;
  res.fcf_mean = Eigen::Map<Eigen::VectorXd>(res.fcf_errors.data(), trials).mean();
  res.icf_mean = Eigen::Map<Eigen::VectorXd>(res.icf_errors.data(), trials).mean();
  return res;
}

WaveformResult run_waveform(int length, std::uint64_t seed) {
  pin_blas_threads();
  Eigen::VectorXd x1 = synth_waveform(WaveKind::Square, length, 400);
  Eigen::VectorXd x2 = synth_waveform(WaveKind::Sawtooth, length, 313);
  Eigen::MatrixXd a = orthogonal_mixing();
  std::vector<Eigen::VectorXd> mixed = {a(0, 0) * x1 + a(0, 1) * x2,
                                        a(1, 0) * x1 + a(1, 1) * x2};
  EmbeddingSpec spec = spectrogram_embedding_spec(250, 125, 256);
  EmbeddedUnmixResult fca = unmix_via_embedding(
      mixed, spec, ObjectiveKind::RectKurtosis, kurtosis_config(seed));
  WaveformResult res;
  res.fca_error = unmixing_error(a, fca.mixing_estimate).error;

  MatrixStack raw = MatrixStack::rectangular(
      {mixed[0].transpose(), mixed[1].transpose()});
  FactorizationResult ica =
      icf(raw, ObjectiveKind::ScalarKurtosis, kurtosis_config(seed));
  res.ica_error = unmixing_error(a, ica.mixing_estimate).error;
  return res;
}

ConvergenceResult run_convergence(const std::vector<int>& n_values,
                                  double aspect, int trials,
                                  std::uint64_t seed, int threads) {
  ConvergenceResult res;
  res.n_values = n_values;
  const int sizes = static_cast<int>(n_values.size());
  res.mean_errors.resize(4, sizes);
  Eigen::MatrixXd a = orthogonal_mixing();
  for (int si = 0; si < sizes; ++si) {
    int n = n_values[si];
    int m = static_cast<int>(std::lround(n / aspect));
    Eigen::MatrixXd errs(4, trials);
    run_trials(trials, threads, [&](int t) {
      std::uint64_t ts = seed + static_cast<std::uint64_t>(t) +
                         static_cast<std::uint64_t>(si) * 100003ULL;
      MatrixStack z = mix(rect_sources(n, m, ts), a);
      FactorizationResult fk =
          fcf(z, ObjectiveKind::RectKurtosis, kurtosis_config(ts));
      errs(0, t) = unmixing_error(a, fk.mixing_estimate).error;
      FactorizationResult fe = fcf(z, ObjectiveKind::RectEntropy,
                                   entropy_config(ts, fk.orthogonal_factor));
      errs(1, t) = unmixing_error(a, fe.mixing_estimate).error;
      FactorizationResult ik =
          icf(z, ObjectiveKind::ScalarKurtosis, kurtosis_config(ts));
      errs(2, t) = unmixing_error(a, ik.mixing_estimate).error;
      FactorizationResult ie =
          icf(z, ObjectiveKind::ScalarNegentropy, kurtosis_config(ts));
      errs(3, t) = unmixing_error(a, ie.mixing_estimate).error;
    });
    res.mean_errors.col(si) = errs.rowwise().mean();
  }
  std::vector<double> ns(n_values.begin(), n_values.end());
  for (int method = 0; method < 4; ++method) {
    std::vector<double> means(sizes);
    for (int si = 0; si < sizes; ++si) means[si] = res.mean_errors(method, si);
    res.slopes(method) = log_log_slope(ns, means);
  }
  return res;
}

LandscapeResult run_landscape(int grid_points, int rows, int cols,
                              std::uint64_t seed) {
  pin_blas_threads();
  Eigen::MatrixXd x1 = center_normalize(synth_texture(rows, cols, derive_seed(seed, 0)));
  EnsembleSpec gauss{EnsembleKind::IidGaussian, rows, cols, nullptr,
                     derive_seed(seed, 1)};
  Eigen::MatrixXd x2 = center_normalize(sample(gauss));
  Eigen::MatrixXd a = orthogonal_mixing();
  Eigen::MatrixXd z1 = a(0, 0) * x1 + a(0, 1) * x2;
  Eigen::MatrixXd z2 = a(1, 0) * x1 + a(1, 1) * x2;

  auto standardized = [](const Eigen::MatrixXd& m) {
    Eigen::Map<const Eigen::VectorXd> v(m.data(), m.size());
    Eigen::VectorXd c = v.array() - v.mean();
    double sd = std::sqrt(c.squaredNorm() / c.size());
    return Eigen::VectorXd(c / sd);
  };
  Eigen::VectorXd v1 = standardized(z1);
  Eigen::VectorXd v2 = standardized(z2);

  LandscapeResult res;
  res.theta.resize(grid_points);
  res.classical_kurtosis_abs.resize(grid_points);
  res.free_kurtosis_abs.resize(grid_points);
  res.entropy_score.resize(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    double theta = 2.0 * M_PI * g / grid_points;
    double c = std::cos(theta), s = std::sin(theta);
    res.theta(g) = theta;
    res.classical_kurtosis_abs(g) =
        std::abs(classical_kurtosis(c * v1 + s * v2));
    Eigen::MatrixXd mix1 = c * z1 + s * z2;
    res.free_kurtosis_abs(g) = std::abs(free_kurtosis_rect(mix1));
    try {
      Eigen::MatrixXd mix2 = -s * z1 + c * z2;
      res.entropy_score(g) = -free_entropy_rect(mix1) - free_entropy_rect(mix2);
    } catch (const DegenerateSpectrumError&) {
      res.entropy_score(g) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return res;
}

}  // namespace freeunmix
