#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "freeunmix/datagen.hpp"
#include "freeunmix/free_stats.hpp"
#include "freeunmix/manifold_opt.hpp"
#include "freeunmix/whitening.hpp"
#include "test_util.hpp"

using namespace freeunmix;
using Eigen::MatrixXd;

namespace {

MatrixXd fd_gradient(ObjectiveKind kind, const MatrixXd& w, const MatrixStack& y,
                     double h) {
  MatrixXd g(w.rows(), w.cols());
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      MatrixXd wp = w, wm = w;
      wp(r, c) += h;
      wm(r, c) -= h;
      g(r, c) = (objective_value(kind, wp, y) - objective_value(kind, wm, y)) /
                (2.0 * h);
    }
  return g;
}

void check_gradient_matches_fd(ObjectiveKind kind, const MatrixXd& w,
                               const MatrixStack& y, double tol = 1e-5) {
  MatrixXd g = euclidean_gradient(kind, w, y);
  MatrixXd fd = fd_gradient(kind, w, y, 1e-5);
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double denom = std::max(1.0, std::abs(g(r, c)));
      CHECK(std::abs(g(r, c) - fd(r, c)) / denom < tol);
    }
}

// Smallest adjacent gap of the relevant spectrum of every component.
double min_spectral_gap(ObjectiveKind kind, const MatrixXd& w,
                        const MatrixStack& y) {
  MatrixStack x = y.linear_combination(w.transpose());
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.count(); ++i) {
    Eigen::VectorXd lam;
    if (kind == ObjectiveKind::SaEntropy) {
      lam = detail::sym_eigenvalues(x.real(i));
    } else {
      Eigen::MatrixXd gram = x.real(i) * x.real(i).transpose();
      lam = detail::sym_eigenvalues(gram);
      worst = std::min(worst, lam.minCoeff());
    }
    for (Eigen::Index k = 0; k + 1 < lam.size(); ++k)
      worst = std::min(worst, lam(k + 1) - lam(k));
  }
  return worst;
}

MatrixXd signed_permutation(int s, Rng& rng) {
  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = s - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<int>(rng.uniform() * (i + 1))]);
  MatrixXd p = MatrixXd::Zero(s, s);
  for (int i = 0; i < s; ++i)
    p(perm[i], i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return p;
}

}  // namespace

TEST_CASE("objective value at identity sums the per-component contrasts") {
  Rng rng(41);
  MatrixStack y = testutil::random_sa_stack(3, 25, rng);
  double manual = 0.0;
  for (int i = 0; i < 3; ++i) manual -= std::abs(free_kurtosis_sa(y.real(i)));
  CHECK(objective_value(ObjectiveKind::SaKurtosis, MatrixXd::Identity(3, 3), y) ==
        doctest::Approx(manual).epsilon(1e-12));

  double manual_ent = 0.0;
  for (int i = 0; i < 3; ++i) manual_ent += free_entropy_sa(y.real(i));
  CHECK(objective_value(ObjectiveKind::SaEntropy, MatrixXd::Identity(3, 3), y) ==
        doctest::Approx(manual_ent).epsilon(1e-12));
}

TEST_CASE("objective invariance under signed permutations and sign flips") {
  Rng rng(42);
  MatrixStack y = testutil::random_sa_stack(3, 20, rng);
  MatrixXd w = random_orthogonal(3, 5);
  for (auto kind : {ObjectiveKind::SaKurtosis, ObjectiveKind::SaEntropy,
                    ObjectiveKind::ScalarKurtosis, ObjectiveKind::ScalarNegentropy}) {
    double base = objective_value(kind, w, y);
    MatrixXd flip = MatrixXd::Identity(3, 3);
    flip(0, 0) = -1.0;
    CHECK(objective_value(kind, MatrixXd(w * flip), y) ==
          doctest::Approx(base).epsilon(1e-12));
    if (is_kurtosis_kind(kind)) {
      MatrixXd p = signed_permutation(3, rng);
      CHECK(objective_value(kind, MatrixXd(w * p), y) ==
            doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient of the zero stack vanishes") {
  MatrixStack y = MatrixStack::zeros(StackKind::SelfAdjoint, 2, 8, 8);
  MatrixXd g = euclidean_gradient(ObjectiveKind::SaKurtosis,
                                  MatrixXd::Identity(2, 2), y);
  CHECK(g.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("s = 1 kurtosis gradient matches the hand expansion") {
  Rng rng(43);
  MatrixXd y1 = testutil::symmetric_gaussian(15, rng);
  MatrixStack y = MatrixStack::self_adjoint({y1});
  const double n = 15.0;
  double tr2 = (y1 * y1).trace();
  double tr4 = (y1 * y1 * y1 * y1).trace();
  double kurt = tr4 / n - 2.0 * (tr2 / n) * (tr2 / n);
  double expected = -((kurt > 0) - (kurt < 0)) *
                    (4.0 * tr4 / n - 8.0 * tr2 * tr2 / (n * n));
  MatrixXd g = euclidean_gradient(ObjectiveKind::SaKurtosis, MatrixXd::Ones(1, 1), y);
  CHECK(g(0, 0) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("gradients match central finite differences for all kinds") {
  int accepted_sa_ent = 0, accepted_rect_ent = 0;
  for (int seed = 0; accepted_sa_ent < 5 || accepted_rect_ent < 5; ++seed) {
    REQUIRE(seed < 200);
    Rng rng = Rng::stream(4400, seed);
    MatrixXd w = random_orthogonal(3, 4400 + seed);

    MatrixStack ysa = testutil::random_sa_stack(3, 20, rng);
    check_gradient_matches_fd(ObjectiveKind::SaKurtosis, w, ysa);
    if (accepted_sa_ent < 5 &&
        min_spectral_gap(ObjectiveKind::SaEntropy, w, ysa) > 1e-3) {
      check_gradient_matches_fd(ObjectiveKind::SaEntropy, w, ysa);
      ++accepted_sa_ent;
    }

    MatrixStack yrect = testutil::random_rect_stack(3, 20, 30, rng);
    check_gradient_matches_fd(ObjectiveKind::RectKurtosis, w, yrect);
    check_gradient_matches_fd(ObjectiveKind::ScalarKurtosis, w, yrect);
    check_gradient_matches_fd(ObjectiveKind::ScalarNegentropy, w, yrect);
    if (accepted_rect_ent < 5 &&
        min_spectral_gap(ObjectiveKind::RectEntropy, w, yrect) > 1e-3) {
      check_gradient_matches_fd(ObjectiveKind::RectEntropy, w, yrect);
      ++accepted_rect_ent;
    }
  }
}

TEST_CASE("complex rectangular gradients match finite differences") {
  Rng rng(45);
  MatrixStack y = testutil::random_cplx_stack(2, 10, 14, rng);
  MatrixXd w = random_orthogonal(2, 45);
  check_gradient_matches_fd(ObjectiveKind::RectKurtosis, w, y);
  check_gradient_matches_fd(ObjectiveKind::RectEntropy, w, y);
}

TEST_CASE("cached evaluators agree with the direct formulas") {
  Rng rng(46);
  MatrixStack ysa = testutil::random_sa_stack(3, 18, rng);
  MatrixStack yrect = testutil::random_rect_stack(3, 15, 21, rng);
  MatrixStack ycplx = testutil::random_cplx_stack(2, 9, 13, rng);
  struct Case {
    ObjectiveKind kind;
    const MatrixStack* y;
  } cases[] = {
      {ObjectiveKind::SaKurtosis, &ysa},
      {ObjectiveKind::RectKurtosis, &yrect},
      {ObjectiveKind::RectKurtosis, &ycplx},
      {ObjectiveKind::ScalarKurtosis, &yrect},
      {ObjectiveKind::ScalarNegentropy, &yrect},
      {ObjectiveKind::SaEntropy, &ysa},
      {ObjectiveKind::RectEntropy, &yrect},
  };
  for (const auto& c : cases) {
    auto eval = make_contrast_evaluator(c.kind, *c.y);
    for (int rep = 0; rep < 4; ++rep) {
      MatrixXd w = random_orthogonal(c.y->count(), 100 + rep);
      CHECK(eval->value(w) ==
            doctest::Approx(objective_value(c.kind, w, *c.y)).epsilon(1e-9));
      MatrixXd g1 = eval->gradient(w);
      MatrixXd g2 = euclidean_gradient(c.kind, w, *c.y);
      CHECK((g1 - g2).cwiseAbs().maxCoeff() <
            1e-9 * std::max(1.0, g2.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("riemannian step: projection annihilates the normal space") {
  Rng rng(47);
  MatrixXd w = random_orthogonal(4, 70);
  MatrixXd sym = testutil::symmetric_gaussian(4, rng);
  MatrixXd g_normal = w * sym;
  MatrixXd stepped = riemannian_step(w, g_normal, 0.7);
  CHECK((stepped - w).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((riemannian_step(w, testutil::gaussian(4, 4, rng), 0.0) - w)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("retraction returns orthogonal matrices") {
  Rng rng(48);
  for (int rep = 0; rep < 50; ++rep) {
    int s = 2 + rep % 4;
    MatrixXd w = random_orthogonal(s, 300 + rep);
    MatrixXd g = testutil::gaussian(s, s, rng);
    MatrixXd next = riemannian_step(w, g, std::pow(10.0, rng.uniform() * 4 - 2));
    CHECK((next.transpose() * next - MatrixXd::Identity(s, s)).norm() < 1e-10);
  }
}

TEST_CASE("optimize recovers an axis-aligned free structure") {
  Rng rng(49);
  const int n = 300;
  EnsembleSpec goe{EnsembleKind::Goe, n, n, nullptr, 7100};
  EnsembleSpec wish{EnsembleKind::Wishart, n, 2 * n, nullptr, 7101};
  MatrixStack x = MatrixStack::self_adjoint({sample(goe), sample(wish)});
  WhiteningResult wr = whiten(x);
  OptimizerConfig cfg;
  cfg.rng_seed = 12;
  auto [w, trace] = optimize(ObjectiveKind::SaKurtosis, wr.whitened, cfg);

  // W should be a signed permutation up to finite-N error
  Eigen::MatrixXd abs_w = w.cwiseAbs();
  double off = std::min(abs_w(0, 0) + abs_w(1, 1), abs_w(0, 1) + abs_w(1, 0));
  CHECK(std::min(off, 2.0 - off) < 0.1);
  CHECK((w.transpose() * w - MatrixXd::Identity(2, 2)).norm() < 1e-10);

  for (size_t i = 1; i < trace.objective_history.size(); ++i)
    CHECK(trace.objective_history[i] <= trace.objective_history[i - 1] + 1e-12);
}

TEST_CASE("s = 1 returns the trivial group element immediately") {
  Rng rng(50);
  MatrixStack y = testutil::random_sa_stack(1, 10, rng);
  auto [w, trace] = optimize(ObjectiveKind::SaKurtosis, y, OptimizerConfig{});
  CHECK(w.rows() == 1);
  CHECK(std::abs(std::abs(w(0, 0)) - 1.0) < 1e-15);
  CHECK(trace.converged);
}

TEST_CASE("optimize is deterministic for a fixed seed") {
  Rng rng(51);
  MatrixStack x = testutil::random_sa_stack(2, 40, rng);
  MatrixXd a(2, 2);
  a << 1.0, 0.3, -0.2, 0.8;
  MatrixStack y = whiten(mix(x, a)).whitened;
  OptimizerConfig cfg;
  cfg.rng_seed = 77;
  auto [w1, t1] = optimize(ObjectiveKind::SaKurtosis, y, cfg);
  auto [w2, t2] = optimize(ObjectiveKind::SaKurtosis, y, cfg);
  CHECK((w1 - w2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t1.iterations == t2.iterations);
}

TEST_CASE("invalid optimizer configurations are rejected") {
  Rng rng(53);
  MatrixStack y = testutil::random_sa_stack(2, 8, rng);
  OptimizerConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(optimize(ObjectiveKind::SaKurtosis, y, cfg), Error);
  cfg = OptimizerConfig{};
  cfg.grad_tol = 0.0;
  CHECK_THROWS_AS(optimize(ObjectiveKind::SaKurtosis, y, cfg), Error);
  cfg = OptimizerConfig{};
  cfg.restarts = 0;
  CHECK_THROWS_AS(optimize(ObjectiveKind::SaKurtosis, y, cfg), Error);
}

TEST_CASE("rect objective sign-flip invariance") {
  Rng rng(54);
  MatrixStack y = testutil::random_rect_stack(2, 10, 14, rng);
  MatrixXd w = random_orthogonal(2, 54);
  MatrixXd flip = MatrixXd::Identity(2, 2);
  flip(1, 1) = -1.0;
  for (auto kind : {ObjectiveKind::RectKurtosis, ObjectiveKind::RectEntropy}) {
    CHECK(objective_value(kind, MatrixXd(w * flip), y) ==
          doctest::Approx(objective_value(kind, w, y)).epsilon(1e-12));
  }
}

TEST_CASE("kind and stack mismatches are rejected") {
  Rng rng(52);
  MatrixStack ysa = testutil::random_sa_stack(2, 8, rng);
  MatrixStack yrect = testutil::random_rect_stack(2, 8, 12, rng);
  MatrixStack ycplx = testutil::random_cplx_stack(2, 8, 12, rng);
  MatrixXd w = MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(objective_value(ObjectiveKind::RectKurtosis, w, ysa),
                  KindMismatchError);
  CHECK_THROWS_AS(objective_value(ObjectiveKind::SaKurtosis, w, yrect),
                  KindMismatchError);
  CHECK_THROWS_AS(objective_value(ObjectiveKind::ScalarKurtosis, w, ycplx),
                  KindMismatchError);
}
