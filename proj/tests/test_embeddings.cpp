#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "freeunmix/datagen.hpp"
#include "freeunmix/embeddings.hpp"
#include "freeunmix/matrix_stack.hpp"
#include "test_util.hpp"

using namespace freeunmix;
using Eigen::MatrixXd;

namespace {

double stack_gap(const MatrixStack& a, const MatrixStack& b, int i) {
  if (a.is_complex()) return (a.cplx(i) - b.cplx(i)).cwiseAbs().maxCoeff();
  return (a.real(i) - b.real(i)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("symmetric embedding with exact capacity is a bijective packing") {
  // 1 x 3 input, target 3: slots = 3, S empty
  Rng rng(1);
  MatrixXd z(1, 3);
  z << 1.0, 2.0, 3.0;
  EmbeddingSpec spec = symmetric_embedding_spec(3, 3, rng);
  CHECK(spec.zero_positions.empty());
  MatrixStack out = embed(MatrixStack::rectangular({z}), spec);
  CHECK(out.kind() == StackKind::SelfAdjoint);
  const MatrixXd& m = out.real(0);
  CHECK(m(0, 0) == 0.0);
  CHECK(m(0, 1) == 1.0);
  CHECK(m(1, 0) == 1.0);
  CHECK(is_hermitian(m));
  // all three inputs appear
  CHECK(m.cwiseAbs().sum() == doctest::Approx(2.0 * (1 + 2 + 3)));
}

TEST_CASE("zero input embeds to zero") {
  Rng rng(2);
  EmbeddingSpec sym = symmetric_embedding_spec(12, 8, rng);
  EmbeddingSpec rect = rectangular_embedding_spec(12, 5, 4, rng);
  MatrixStack z = MatrixStack::zeros(StackKind::Rectangular, 2, 3, 4);
  CHECK(embed(z, sym).real(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(embed(z, rect).real(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embeddings are linear entrywise") {
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    MatrixStack z1 = testutil::random_rect_stack(2, 4, 6, rng);
    MatrixStack z2 = testutil::random_rect_stack(2, 4, 6, rng);
    double alpha = rng.gaussian(), beta = rng.gaussian();
    MatrixXd comb0 = alpha * z1.real(0) + beta * z2.real(0);
    MatrixXd comb1 = alpha * z1.real(1) + beta * z2.real(1);
    MatrixStack z3 = MatrixStack::rectangular({comb0, comb1});

    EmbeddingSpec sym = symmetric_embedding_spec(24, 9 + rep, rng);
    MatrixStack e1 = embed(z1, sym), e2 = embed(z2, sym), e3 = embed(z3, sym);
    for (int i = 0; i < 2; ++i)
      CHECK((e3.real(i) - alpha * e1.real(i) - beta * e2.real(i))
                .cwiseAbs()
                .maxCoeff() < 1e-12);

    EmbeddingSpec rect = rectangular_embedding_spec(24, 5, 6 + rep, rng);
    e1 = embed(z1, rect);
    e2 = embed(z2, rect);
    e3 = embed(z3, rect);
    for (int i = 0; i < 2; ++i)
      CHECK((e3.real(i) - alpha * e1.real(i) - beta * e2.real(i))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("every embedding commutes with mixing") {
  Rng rng(4);
  MatrixStack x = testutil::random_rect_stack(3, 4, 5, rng);
  MatrixXd a = testutil::gaussian(3, 3, rng);
  MatrixStack z = mix(x, a);

  EmbeddingSpec sym = symmetric_embedding_spec(20, 8, rng);
  MatrixStack lhs = embed(z, sym);
  MatrixStack rhs = mix(embed(x, sym), a);
  for (int i = 0; i < 3; ++i) CHECK(stack_gap(lhs, rhs, i) < 1e-10);

  EmbeddingSpec rect = rectangular_embedding_spec(20, 7, 3, rng);
  lhs = embed(z, rect);
  rhs = mix(embed(x, rect), a);
  for (int i = 0; i < 3; ++i) CHECK(stack_gap(lhs, rhs, i) < 1e-10);

  // spectrogram path on signals
  std::vector<Eigen::VectorXd> sigs;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd s(900);
    for (int t = 0; t < 900; ++t) s(t) = rng.gaussian();
    sigs.push_back(s);
  }
  Eigen::MatrixXd a2 = testutil::gaussian(2, 2, rng);
  std::vector<Eigen::VectorXd> mixed = {a2(0, 0) * sigs[0] + a2(0, 1) * sigs[1],
                                        a2(1, 0) * sigs[0] + a2(1, 1) * sigs[1]};
  EmbeddingSpec spec = spectrogram_embedding_spec(250, 125, 256);
  MatrixStack es = embed_signals(sigs, spec);
  MatrixStack em = embed_signals(mixed, spec);
  MatrixStack expected = mix(es, a2);
  for (int i = 0; i < 2; ++i) CHECK(stack_gap(em, expected, i) < 1e-10);
}

TEST_CASE("capacity violations raise dimension errors") {
  Rng rng(5);
  CHECK_THROWS_AS(symmetric_embedding_spec(100, 8, rng), DimensionError);
  CHECK_THROWS_AS(rectangular_embedding_spec(100, 7, 7, rng), DimensionError);
  EmbeddingSpec sym = symmetric_embedding_spec(10, 6, rng);
  MatrixStack too_big = MatrixStack::zeros(StackKind::Rectangular, 1, 4, 4);
  CHECK_THROWS_AS(embed(too_big, sym), DimensionError);
}

TEST_CASE("stft of a constant signal puts the window sum in the DC bin") {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(1000);
  Eigen::MatrixXcd s = stft(ones, 250, 125, 256);
  double wsum = 0.0;
  for (int n = 0; n < 250; ++n)
    wsum += 0.54 - 0.46 * std::cos(2.0 * M_PI * n / 249.0);
  CHECK(s.rows() == 129);
  CHECK(s.cols() == (1000 - 250) / 125 + 1);
  for (int t = 0; t < s.cols(); ++t)
    CHECK(std::abs(s(0, t) - std::complex<double>(wsum, 0.0)) < 1e-9);

  Eigen::MatrixXcd zero = stft(Eigen::VectorXd::Zero(600), 250, 125, 256);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stft concentrates a bin-aligned tone around its bin") {
  // The Hamming main lobe spans a few bins, so the peak bin holds ~48% of the
  // column L1 mass; >= 99% of the energy sits within +-2 bins of the peak.
  const int k0 = 32;
  Eigen::VectorXd x(4000);
  for (int n = 0; n < x.size(); ++n)
    x(n) = std::cos(2.0 * M_PI * k0 * n / 256.0);
  Eigen::MatrixXcd s = stft(x, 250, 125, 256);
  for (int t = 0; t < s.cols(); ++t) {
    Eigen::VectorXd e = s.col(t).cwiseAbs2();
    Eigen::Index peak;
    e.maxCoeff(&peak);
    CHECK(peak == k0);
    double nb = 0.0;
    for (Eigen::Index k = std::max<Eigen::Index>(0, peak - 2);
         k <= std::min<Eigen::Index>(e.size() - 1, peak + 2); ++k)
      nb += e(k);
    CHECK(nb / e.sum() > 0.99);
  }
}

TEST_CASE("stft rejects signals shorter than the window") {
  CHECK_THROWS_AS(stft(Eigen::VectorXd::Zero(100), 250, 125, 256),
                  DimensionError);
  CHECK_THROWS_AS(spectrogram_embedding_spec(250, 300, 256), DimensionError);
}

TEST_CASE("stft is linear in the signal") {
  Rng rng(6);
  Eigen::VectorXd x1(700), x2(700);
  for (int n = 0; n < 700; ++n) {
    x1(n) = rng.gaussian();
    x2(n) = rng.gaussian();
  }
  Eigen::MatrixXcd s1 = stft(x1, 250, 125, 256);
  Eigen::MatrixXcd s2 = stft(x2, 250, 125, 256);
  Eigen::MatrixXcd s12 = stft(2.0 * x1 - 0.5 * x2, 250, 125, 256);
  CHECK((s12 - 2.0 * s1 + 0.5 * s2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("complex rectangular embedding keeps complex entries") {
  Rng rng(7);
  MatrixStack z = testutil::random_cplx_stack(2, 3, 4, rng);
  EmbeddingSpec rect = rectangular_embedding_spec(12, 4, 5, rng);
  MatrixStack e = embed(z, rect);
  CHECK(e.kind() == StackKind::ComplexRectangular);
  CHECK(e.rows() == 4);
  CHECK(e.cols() == 5);
  CHECK_THROWS_AS(embed(z, symmetric_embedding_spec(12, 7, rng)), DimensionError);
}
