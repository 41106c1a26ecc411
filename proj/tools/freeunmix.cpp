// Command-line harness: blind unmixing of matrix/signal mixtures (unmix) and
// desk-scale reproductions of the reference experiments (demo).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "freeunmix/datagen.hpp"
#include "freeunmix/evaluation.hpp"
#include "freeunmix/experiments.hpp"
#include "freeunmix/factorization.hpp"
#include "freeunmix/free_stats.hpp"
#include "freeunmix/io_formats.hpp"
#include "freeunmix/rng.hpp"
#include "freeunmix/whitening.hpp"

namespace fs = std::filesystem;
using namespace freeunmix;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNumerical = 3;

std::string infer_format(const fs::path& p, const std::string& declared) {
  if (!declared.empty()) return declared;
  std::string ext = p.extension().string();
  if (ext == ".csv") return "csv";
  if (ext == ".f64le" || ext == ".bin") return "f64le";
  if (ext == ".pgm") return "pgm";
  if (ext == ".wav") return "wav";
  throw ParseError("cannot infer format of " + p.string());
}

Eigen::MatrixXd load_component_matrix(const ManifestComponent& c, bool* was_image) {
  std::string fmt = infer_format(c.path, c.format);
  if (!fs::exists(c.path))
    throw ParseError("component file does not exist: " + c.path.string());
  if (fmt == "csv") return read_matrix(c.path, MatrixFileFormat::Csv);
  if (fmt == "f64le") return read_matrix(c.path, MatrixFileFormat::F64le);
  if (fmt == "pgm") {
    if (was_image) *was_image = true;
    return read_image_pgm(c.path);
  }
  throw ParseError("component " + c.path.string() +
                   ": format '" + fmt + "' is not a matrix format");
}

Eigen::VectorXd load_component_signal(const ManifestComponent& c) {
  std::string fmt = infer_format(c.path, c.format);
  if (!fs::exists(c.path))
    throw ParseError("component file does not exist: " + c.path.string());
  if (fmt == "wav") return read_audio_wav(c.path).first;
  Eigen::MatrixXd m = load_component_matrix(c, nullptr);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw ParseError("component " + c.path.string() +
                   ": signals must be a single row or column");
}

struct UnmixOptions {
  std::string input;
  std::string method = "fca-kurtosis";
  std::string embed = "none";
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int embed_rows = 0;
  int embed_cols = 0;
  int window = 250;
  int hop = 125;
  int dft = 256;
};

ObjectiveKind matrix_kind_for(const std::string& method, StackKind stack) {
  bool sa = stack == StackKind::SelfAdjoint;
  if (method == "fca-kurtosis")
    return sa ? ObjectiveKind::SaKurtosis : ObjectiveKind::RectKurtosis;
  return sa ? ObjectiveKind::SaEntropy : ObjectiveKind::RectEntropy;
}

void print_summary(const std::string& method, std::optional<double> error,
                   const OptimizerTrace& trace) {
  std::printf("method=%s error=%s iters=%d converged=%s\n", method.c_str(),
              error ? std::to_string(*error).c_str() : "n/a",
              trace.iterations, trace.converged ? "true" : "false");
}

int run_unmix(const UnmixOptions& opt) {
  DatasetManifest man = read_manifest(opt.input);
  std::uint64_t seed = opt.seed_given ? opt.seed : man.seed;
  OptimizerConfig cfg;
  cfg.rng_seed = seed;
  bool is_fca = opt.method.rfind("fca-", 0) == 0;
  bool want_entropy = opt.method.find("entropy") != std::string::npos;
  fs::path out_dir(opt.out);

  if (man.kind == "signal") {
    std::vector<Eigen::VectorXd> signals;
    for (const auto& c : man.components)
      signals.push_back(load_component_signal(c));
    for (const auto& s : signals)
      if (s.size() != signals.front().size())
        throw ParseError("signal components have differing lengths");
    if (man.mixing_matrix) {
      Eigen::MatrixXd raw(signals.size(), signals.front().size());
      for (size_t i = 0; i < signals.size(); ++i) raw.row(i) = signals[i].transpose();
      Eigen::MatrixXd mixed = *man.mixing_matrix * raw;
      for (size_t i = 0; i < signals.size(); ++i)
        signals[i] = mixed.row(static_cast<Eigen::Index>(i)).transpose();
    }

    FactorizationResult result;
    if (is_fca) {
      if (opt.embed == "none")
        throw ParseError("fca methods on signals require --embed");
      Rng rng(Rng::splitmix64(seed) ^ 0x5eedULL);
      long t = signals.front().size();
      EmbeddingSpec spec;
      ObjectiveKind kind;
      if (opt.embed == "spectrogram") {
        spec = spectrogram_embedding_spec(opt.window, opt.hop, opt.dft);
        kind = want_entropy ? ObjectiveKind::RectEntropy
                            : ObjectiveKind::RectKurtosis;
      } else if (opt.embed == "symmetric") {
        int dim = opt.embed_rows
                      ? opt.embed_rows
                      : static_cast<int>(std::ceil((1 + std::sqrt(1.0 + 8.0 * t)) / 2));
        spec = symmetric_embedding_spec(t, dim, rng);
        kind = want_entropy ? ObjectiveKind::SaEntropy : ObjectiveKind::SaKurtosis;
      } else {
        int rows = opt.embed_rows ? opt.embed_rows
                                  : static_cast<int>(std::ceil(std::sqrt(t)));
        int cols = opt.embed_cols
                       ? opt.embed_cols
                       : static_cast<int>((t + rows - 1) / rows);
        spec = rectangular_embedding_spec(t, rows, cols, rng);
        kind = want_entropy ? ObjectiveKind::RectEntropy
                            : ObjectiveKind::RectKurtosis;
      }
      EmbeddedUnmixResult eur = unmix_via_embedding(signals, spec, kind, cfg);
      result = std::move(eur.embedded);
      std::vector<Eigen::MatrixXd> rows;
      for (const auto& sig : eur.signals) rows.push_back(sig.transpose());
      result.components = MatrixStack::rectangular(std::move(rows));
      for (int i = 0; i < result.components.count(); ++i)
        result.statistic_per_component(i) =
            classical_kurtosis(eur.signals[static_cast<size_t>(i)]);
    } else {
      if (opt.embed != "none")
        throw ParseError("ica methods operate on raw signals; use --embed none");
      std::vector<Eigen::MatrixXd> rows;
      for (const auto& sig : signals) rows.push_back(sig.transpose());
      MatrixStack z = MatrixStack::rectangular(std::move(rows));
      result = icf(z,
                   want_entropy ? ObjectiveKind::ScalarNegentropy
                                : ObjectiveKind::ScalarKurtosis,
                   cfg);
    }
    std::optional<double> err;
    if (man.mixing_matrix)
      err = unmixing_error(*man.mixing_matrix, result.mixing_estimate).error;
    write_result(result, out_dir, err, seed, false);
    print_summary(opt.method, err, result.trace);
    return 0;
  }

  // matrix data
  bool any_image = false;
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& c : man.components)
    mats.push_back(load_component_matrix(c, &any_image));
  MatrixStack stack = man.kind == "self-adjoint"
                          ? MatrixStack::self_adjoint(std::move(mats))
                          : MatrixStack::rectangular(std::move(mats));
  MatrixStack z = man.mixing_matrix ? mix(stack, *man.mixing_matrix) : stack;

  FactorizationResult result;
  if (is_fca) {
    if (opt.embed == "none") {
      result = fcf(z, matrix_kind_for(opt.method, z.kind()), cfg);
    } else if (opt.embed == "spectrogram") {
      throw ParseError("spectrogram embedding applies to signal data only");
    } else {
      Rng rng(Rng::splitmix64(seed) ^ 0x5eedULL);
      long elems = z.rows() * z.cols();
      EmbeddingSpec spec;
      ObjectiveKind kind;
      if (opt.embed == "symmetric") {
        int dim = opt.embed_rows
                      ? opt.embed_rows
                      : static_cast<int>(
                            std::ceil((1 + std::sqrt(1.0 + 8.0 * elems)) / 2));
        spec = symmetric_embedding_spec(elems, dim, rng);
        kind = want_entropy ? ObjectiveKind::SaEntropy : ObjectiveKind::SaKurtosis;
      } else {
        int rows = opt.embed_rows
                       ? opt.embed_rows
                       : static_cast<int>(std::ceil(std::sqrt(elems)));
        int cols = opt.embed_cols
                       ? opt.embed_cols
                       : static_cast<int>((elems + rows - 1) / rows);
        spec = rectangular_embedding_spec(elems, rows, cols, rng);
        kind = want_entropy ? ObjectiveKind::RectEntropy
                            : ObjectiveKind::RectKurtosis;
      }
      // Ahat comes from the embedded stack, Xhat from the original one.
      FactorizationResult inner = fcf(embed(z, spec), kind, cfg);
      result = std::move(inner);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(result.mixing_estimate);
      Eigen::MatrixXd unmix_coeffs =
          lu.solve(Eigen::MatrixXd::Identity(z.count(), z.count()));
      result.components = z.linear_combination(unmix_coeffs);
      ObjectiveKind stat_kind = matrix_kind_for(opt.method, z.kind());
      for (int i = 0; i < result.components.count(); ++i) {
        if (stat_kind == ObjectiveKind::SaKurtosis)
          result.statistic_per_component(i) =
              free_kurtosis_sa(result.components.real(i));
        else
          result.statistic_per_component(i) =
              free_kurtosis_rect(result.components.real(i));
      }
    }
  } else {
    if (opt.embed != "none")
      throw ParseError("ica methods do not take an embedding");
    result = icf(z,
                 want_entropy ? ObjectiveKind::ScalarNegentropy
                              : ObjectiveKind::ScalarKurtosis,
                 cfg);
  }
  std::optional<double> err;
  if (man.mixing_matrix)
    err = unmixing_error(*man.mixing_matrix, result.mixing_estimate).error;
  write_result(result, out_dir, err, seed, any_image);
  if (result.identifiability_warning)
    std::fprintf(stderr,
                 "warning: two or more components look near-semicircular/"
                 "free-Poisson; the factorization may not be identifiable\n");
  print_summary(opt.method, err, result.trace);
  return 0;
}

struct DemoOptions {
  std::string experiment;
  int trials = 20;
  int n = 0;  // 0 = experiment default
  int length = 60000;
  std::uint64_t seed = 0;
  std::string out = ".";
};

void write_csv_table(const fs::path& path, const std::string& header,
                     const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

void write_demo_config(const fs::path& dir, const DemoOptions& opt, int n_used,
                       int threads) {
  nlohmann::json j;
  j["experiment"] = opt.experiment;
  j["trials"] = opt.trials;
  j["n"] = n_used;
  j["length"] = opt.length;
  j["seed"] = opt.seed;
  j["threads"] = threads;
  std::ofstream out(dir / "config.json");
  out << j.dump(2) << '\n';
}

std::string fmt_row(std::initializer_list<double> values) {
  std::string row;
  char buf[40];
  for (double v : values) {
    if (!row.empty()) row += ',';
    std::snprintf(buf, sizeof buf, "%.10g", v);
    row += buf;
  }
  return row;
}

int run_demo(const DemoOptions& opt) {
  fs::path dir(opt.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  int threads = env_thread_cap();

  if (opt.experiment == "sa-separation" || opt.experiment == "rect-separation") {
    bool sa = opt.experiment == "sa-separation";
    int n = opt.n > 0 ? opt.n : 800;
    int m = sa ? 2 * n : static_cast<int>(std::lround(n / 0.8));
    SeparationResult res = sa ? run_sa_separation(opt.trials, n, m, opt.seed, threads)
                              : run_rect_separation(opt.trials, n, m, opt.seed, threads);
    std::vector<std::string> rows;
    for (int t = 0; t < opt.trials; ++t)
      rows.push_back(std::to_string(t) + "," +
                     fmt_row({res.kurtosis_errors[t], res.entropy_errors[t]}));
    rows.push_back("mean," + fmt_row({res.kurtosis_mean, res.entropy_mean}));
    write_csv_table(dir / (sa ? "sa_separation.csv" : "rect_separation.csv"),
                    "trial,kurtosis_fcf,entropy_fcf", rows);
    write_demo_config(dir, opt, n, threads);
    std::printf("%s: mean kurtosis-FCF error %.6g, mean entropy-FCF error %.6g\n",
                opt.experiment.c_str(), res.kurtosis_mean, res.entropy_mean);
    return 0;
  }
  if (opt.experiment == "image-denoise") {
    int n = opt.n > 0 ? opt.n : 400;
    int cols = 3 * n / 2;
    DenoiseResult res = run_image_denoise(opt.trials, n, cols, opt.seed, threads);
    std::vector<std::string> rows;
    for (int t = 0; t < opt.trials; ++t)
      rows.push_back(std::to_string(t) + "," +
                     fmt_row({res.fcf_errors[t], res.icf_errors[t]}));
    rows.push_back("mean," + fmt_row({res.fcf_mean, res.icf_mean}));
    write_csv_table(dir / "image_denoise.csv", "trial,kurtosis_fcf,kurtosis_icf",
                    rows);
    write_demo_config(dir, opt, n, threads);
    std::printf("image-denoise: FCF mean %.6g, ICF mean %.6g, FCF wins %d/%d\n",
                res.fcf_mean, res.icf_mean, res.fcf_wins, opt.trials);
    return 0;
  }
  if (opt.experiment == "waveform") {
    WaveformResult res = run_waveform(opt.length, opt.seed);
    write_csv_table(dir / "waveform.csv", "method,error",
                    {"fca," + std::to_string(res.fca_error),
                     "ica," + std::to_string(res.ica_error)});
    write_demo_config(dir, opt, opt.length, threads);
    std::printf("waveform: FCA error %.6g, ICA error %.6g\n", res.fca_error,
                res.ica_error);
    return 0;
  }
  if (opt.experiment == "convergence") {
    int cap = opt.n > 0 ? opt.n : 800;
    std::vector<int> ns;
    for (int n : {100, 200, 400, 800})
      if (n <= cap) ns.push_back(n);
    ConvergenceResult res =
        run_convergence(ns, 0.8, opt.trials, opt.seed, threads);
    std::vector<std::string> rows;
    for (size_t si = 0; si < ns.size(); ++si)
      rows.push_back(std::to_string(ns[si]) + "," +
                     fmt_row({res.mean_errors(0, si), res.mean_errors(1, si),
                              res.mean_errors(2, si), res.mean_errors(3, si)}));
    rows.push_back("slope," + fmt_row({res.slopes(0), res.slopes(1),
                                       res.slopes(2), res.slopes(3)}));
    write_csv_table(dir / "convergence.csv",
                    "n,kurtosis_fcf,entropy_fcf,kurtosis_icf,entropy_icf", rows);
    write_demo_config(dir, opt, cap, threads);
    std::printf("convergence slopes: kurtosis-FCF %.3f, entropy-FCF %.3f, "
                "kurtosis-ICF %.3f, entropy-ICF %.3f\n",
                res.slopes(0), res.slopes(1), res.slopes(2), res.slopes(3));
    return 0;
  }
  if (opt.experiment == "landscape") {
    int n = opt.n > 0 ? opt.n : 256;
    int cols = 5 * n / 4;
    LandscapeResult res = run_landscape(720, n, cols, opt.seed);
    std::vector<std::string> rows;
    for (Eigen::Index g = 0; g < res.theta.size(); ++g)
      rows.push_back(fmt_row({res.theta(g), res.classical_kurtosis_abs(g),
                              res.free_kurtosis_abs(g), res.entropy_score(g)}));
    write_csv_table(dir / "landscape.csv",
                    "theta,classical_kurtosis,free_kurtosis,entropy_score", rows);
    write_demo_config(dir, opt, n, threads);
    std::printf("landscape: wrote %d grid points\n",
                static_cast<int>(res.theta.size()));
    return 0;
  }
  throw ParseError("unknown experiment: " + opt.experiment);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free Component Analysis: unmixing additive matrix mixtures"};
  app.require_subcommand(1);

  UnmixOptions uo;
  CLI::App* unmix_cmd =
      app.add_subcommand("unmix", "Unmix a dataset described by a manifest");
  unmix_cmd->add_option("--input", uo.input, "Dataset manifest (JSON)")->required();
  unmix_cmd->add_option("--method", uo.method, "Unmixing method")
      ->check(CLI::IsMember(
          {"fca-kurtosis", "fca-entropy", "ica-kurtosis", "ica-entropy"}));
  unmix_cmd->add_option("--embed", uo.embed, "Matrix embedding for FCA")
      ->check(CLI::IsMember({"none", "symmetric", "rectangular", "spectrogram"}));
  auto* seed_opt = unmix_cmd->add_option("--seed", uo.seed, "RNG seed");
  unmix_cmd->add_option("--out", uo.out, "Output directory");
  unmix_cmd->add_option("--embed-rows", uo.embed_rows, "Embedding target rows");
  unmix_cmd->add_option("--embed-cols", uo.embed_cols, "Embedding target cols");
  unmix_cmd->add_option("--window", uo.window, "STFT window length");
  unmix_cmd->add_option("--hop", uo.hop, "STFT hop");
  unmix_cmd->add_option("--dft", uo.dft, "STFT DFT length");

  DemoOptions dopt;
  CLI::App* demo_cmd = app.add_subcommand("demo", "Run a reference experiment");
  demo_cmd->add_option("--experiment", dopt.experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember({"sa-separation", "rect-separation", "image-denoise",
                             "waveform", "convergence", "landscape"}));
  demo_cmd->add_option("--trials", dopt.trials, "Monte-Carlo trials");
  demo_cmd->add_option("--n", dopt.n, "Matrix dimension (0 = default)");
  demo_cmd->add_option("--length", dopt.length, "Signal length (waveform)");
  demo_cmd->add_option("--seed", dopt.seed, "RNG seed");
  demo_cmd->add_option("--out", dopt.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    use_single_threaded_blas();
    if (unmix_cmd->parsed()) {
      uo.seed_given = seed_opt->count() > 0;
      return run_unmix(uo);
    }
    return run_demo(dopt);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  } catch (const CodecError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}
