#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "freeunmix/datagen.hpp"
#include "freeunmix/io_formats.hpp"
#include "test_util.hpp"

using namespace freeunmix;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(FREEUNMIX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("freeunmix_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int counter;
};
int TempDir::counter = 0;

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("unmix on a self-adjoint fixture with identity mixing") {
  TempDir dir;
  EnsembleSpec goe{EnsembleKind::Goe, 400, 400, nullptr, 1001};
  EnsembleSpec wish{EnsembleKind::Wishart, 400, 800, nullptr, 1002};
  write_matrix(dir.path / "x1.f64le", sample(goe), MatrixFileFormat::F64le);
  write_matrix(dir.path / "x2.f64le", sample(wish), MatrixFileFormat::F64le);
  write_text(dir.path / "man.json", R"({
    "kind": "self-adjoint",
    "components": ["x1.f64le", "x2.f64le"],
    "mixing_matrix": [[1, 0], [0, 1]],
    "seed": 3
  })");
  int rc = run_cli("unmix --input " + (dir.path / "man.json").string() +
                   " --method fca-kurtosis --out " + (dir.path / "out").string());
  CHECK(rc == 0);
  CHECK(fs::exists(dir.path / "out/A_hat.csv"));
  CHECK(fs::exists(dir.path / "out/summary.json"));
  std::string summary = slurp(dir.path / "out/summary.json");
  auto pos = summary.find("\"error\":");
  REQUIRE(pos != std::string::npos);
  double err = std::strtod(summary.c_str() + pos + 8, nullptr);
  CHECK(err < 0.05);
}

TEST_CASE("unmix two images with an inline mixing matrix") {
  TempDir dir;
  Eigen::MatrixXd img1 = synth_texture(96, 128, 11);
  Eigen::MatrixXd img2 = synth_texture(96, 128, 12);
  // store as PGM in [0, 1]
  auto to_unit = [](Eigen::MatrixXd m) {
    m.array() -= m.minCoeff();
    m /= m.maxCoeff();
    return m;
  };
  write_image_pgm(dir.path / "a.pgm", to_unit(img1));
  write_image_pgm(dir.path / "b.pgm", to_unit(img2));
  write_text(dir.path / "man.json", R"({
    "kind": "rectangular",
    "components": ["a.pgm", "b.pgm"],
    "mixing_matrix": [[0.70710678, 0.70710678], [-0.70710678, 0.70710678]],
    "seed": 4
  })");
  int rc = run_cli("unmix --input " + (dir.path / "man.json").string() +
                   " --method fca-kurtosis --out " + (dir.path / "out").string());
  CHECK(rc == 0);
  CHECK(fs::exists(dir.path / "out/X_hat_0.pgm"));
  CHECK(fs::exists(dir.path / "out/X_hat_1.pgm"));
}

TEST_CASE("manifest referencing a missing file exits 2") {
  TempDir dir;
  write_text(dir.path / "man.json", R"({
    "kind": "rectangular",
    "components": ["nope.csv"]
  })");
  CHECK(run_cli("unmix --input " + (dir.path / "man.json").string()) == 2);
  CHECK(run_cli("unmix --input " + (dir.path / "missing.json").string()) == 2);
  CHECK(run_cli("unmix") == 2);  // missing required flag
}

TEST_CASE("numerical failures exit 3") {
  TempDir dir;
  Rng rng(13);
  Eigen::MatrixXd x = testutil::symmetric_gaussian(30, rng);
  write_matrix(dir.path / "x.csv", x, MatrixFileFormat::Csv);
  write_text(dir.path / "man.json", R"({
    "kind": "self-adjoint",
    "components": ["x.csv", "x.csv"]
  })");
  CHECK(run_cli("unmix --input " + (dir.path / "man.json").string() +
                " --method fca-kurtosis --out " + (dir.path / "out").string()) == 3);
}

TEST_CASE("identical seed and flags give identical output files") {
  TempDir dir;
  EnsembleSpec goe{EnsembleKind::Goe, 150, 150, nullptr, 2001};
  EnsembleSpec wish{EnsembleKind::Wishart, 150, 300, nullptr, 2002};
  write_matrix(dir.path / "x1.f64le", sample(goe), MatrixFileFormat::F64le);
  write_matrix(dir.path / "x2.f64le", sample(wish), MatrixFileFormat::F64le);
  write_text(dir.path / "man.json", R"({
    "kind": "self-adjoint",
    "components": ["x1.f64le", "x2.f64le"],
    "mixing_matrix": [[0.5, 0.5], [-0.5, 0.6]]
  })");
  std::string base = "unmix --input " + (dir.path / "man.json").string() +
                     " --method fca-kurtosis --seed 7 --out ";
  CHECK(run_cli(base + (dir.path / "out1").string()) == 0);
  CHECK(run_cli(base + (dir.path / "out2").string()) == 0);
  CHECK(slurp(dir.path / "out1/A_hat.f64le") == slurp(dir.path / "out2/A_hat.f64le"));
  CHECK(slurp(dir.path / "out1/X_hat_0.f64le") ==
        slurp(dir.path / "out2/X_hat_0.f64le"));
}

TEST_CASE("signal manifest through the spectrogram embedding") {
  TempDir dir;
  Eigen::VectorXd x1 = synth_waveform(WaveKind::Square, 8000, 400);
  Eigen::VectorXd x2 = synth_waveform(WaveKind::Sawtooth, 8000, 313);
  write_matrix(dir.path / "s1.csv", x1.transpose(), MatrixFileFormat::Csv);
  write_matrix(dir.path / "s2.csv", x2.transpose(), MatrixFileFormat::Csv);
  write_text(dir.path / "man.json", R"({
    "kind": "signal",
    "components": ["s1.csv", "s2.csv"],
    "mixing_matrix": [[0.70710678, 0.70710678], [-0.70710678, 0.70710678]]
  })");
  int rc = run_cli("unmix --input " + (dir.path / "man.json").string() +
                   " --method fca-kurtosis --embed spectrogram --out " +
                   (dir.path / "out").string());
  CHECK(rc == 0);
  CHECK(fs::exists(dir.path / "out/X_hat_0.csv"));
  // ica on the raw samples also runs
  CHECK(run_cli("unmix --input " + (dir.path / "man.json").string() +
                " --method ica-kurtosis --out " +
                (dir.path / "out2").string()) == 0);
}

TEST_CASE("matrix data through a packing embedding") {
  TempDir dir;
  EnsembleSpec dct{EnsembleKind::DctSpectrum, 40, 50,
                   [](double v) { return std::pow(v - 1.0, 4.0); }, 0};
  EnsembleSpec gauss{EnsembleKind::IidGaussian, 40, 50, nullptr, 3001};
  write_matrix(dir.path / "x1.csv", sample(dct), MatrixFileFormat::Csv);
  write_matrix(dir.path / "x2.csv",
               Eigen::MatrixXd(sample(gauss) / std::sqrt(50.0)),
               MatrixFileFormat::Csv);
  write_text(dir.path / "man.json", R"({
    "kind": "rectangular",
    "components": ["x1.csv", "x2.csv"],
    "mixing_matrix": [[0.5, 0.5], [-0.5, 0.6]],
    "seed": 5
  })");
  for (std::string embedding : {"rectangular", "symmetric"}) {
    int rc = run_cli("unmix --input " + (dir.path / "man.json").string() +
                     " --method fca-kurtosis --embed " + embedding + " --out " +
                     (dir.path / ("out_" + embedding)).string());
    CHECK(rc == 0);
    // Xhat comes from the original stack, so its shape matches the input
    Eigen::MatrixXd xh = read_matrix(dir.path / ("out_" + embedding) / "X_hat_0.csv",
                                     MatrixFileFormat::Csv);
    CHECK(xh.rows() == 40);
    CHECK(xh.cols() == 50);
  }
}

TEST_CASE("demo landscape writes the 720-point grid") {
  TempDir dir;
  int rc = run_cli("demo --experiment landscape --n 64 --seed 1 --out " +
                   dir.path.string());
  CHECK(rc == 0);
  std::string csv = slurp(dir.path / "landscape.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 721);  // header + 720 rows
  CHECK(csv.rfind("theta,classical_kurtosis,free_kurtosis,entropy_score", 0) == 0);
  CHECK(fs::exists(dir.path / "config.json"));
}

TEST_CASE("demo rejects unknown experiments with exit 2") {
  CHECK(run_cli("demo --experiment nonsense") == 2);
}
