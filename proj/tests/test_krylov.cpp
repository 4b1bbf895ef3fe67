#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lsir/densela.hpp"
#include "lsir/krylov.hpp"
#include "lsir/probgen.hpp"

using namespace lsir;

namespace {

std::vector<double> random_vector(std::size_t m, Rng& rng) {
  std::vector<double> v(m);
  for (auto& e : v) e = rng.normal();
  return v;
}

// A R^{-1} formed row by row: row i is R^{-T} a_i.
template <typename T>
double preconditioned_kappa(const Matrix<T>& A, const Matrix<T>& R) {
  Matrix<double> B(A.rows(), A.cols());
  const auto Rd = cast_matrix<double>(R);
  std::vector<double> row(A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < A.cols(); ++j) row[j] = as_double(A(i, j));
    const auto y = tri_solve(Rd, std::span<const double>(row), true);
    for (std::size_t j = 0; j < A.cols(); ++j) B(i, j) = y[j];
  }
  return condition_number(B);
}

}  // namespace

TEST_CASE("default configurations") {
  const auto l32 = default_lsqr_config(0x1p-24, 10);
  CHECK(l32.tol == 1e-7);
  CHECK(l32.max_iters == 10);
  const auto l64 = default_lsqr_config(0x1p-53, 10);
  CHECK(l64.tol == 1e-14);
  const auto g32 = default_gmres_config(0x1p-24);
  CHECK(g32.tol == 1e-6);
  CHECK(g32.max_iters == 50);
  CHECK(default_gmres_config(0x1p-53).tol == 1e-12);
  KrylovConfig bad;
  bad.tol = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.tol = 1e-3;
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("LSQR on the identity takes one iteration") {
  const auto I = Matrix<double>::identity(6);
  Rng rng(1);
  const auto b = random_vector(6, rng);
  KrylovConfig cfg{1e-14, 10, Precondition::None, false};
  const auto res = lsqr(I, std::span<const double>(b), cfg, nullptr);
  CHECK(res.iters == 1);
  CHECK(res.flag == KrylovFlag::Converged);
  CHECK(diff_norm(res.x, b) <= 1e-15 * norm2(b));
}

TEST_CASE("LSQR zero right-hand side") {
  const auto A = gen_randsvd(20, 3, 10, 2);
  const std::vector<double> b(20, 0.0);
  KrylovConfig cfg{1e-14, 10, Precondition::None, false};
  const auto res = lsqr(A, std::span<const double>(b), cfg, nullptr);
  CHECK(res.iters == 0);
  CHECK(res.x == std::vector<double>(3, 0.0));
}

TEST_CASE("preconditioned LSQR matches the QR solution on 50x5 systems") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto A = gen_randsvd(50, 5, 1e2, seed);
    Rng rng(seed + 50);
    const auto b = random_vector(50, rng);
    const auto pre = build_sketch_preconditioner(A, seed);
    KrylovConfig cfg{1e-14, 10, Precondition::SketchRight, true};
    const auto res = lsqr(A, std::span<const double>(b), cfg, &pre);
    const auto ref = qr_least_squares(qr_factor(A), std::span<const double>(b));
    CHECK(res.iters <= 10);
    CHECK(diff_norm(res.x, ref) <= 1e-12 * norm2(ref));
  }
}

TEST_CASE("unpreconditioned LSQR needs at most n + 2 iterations on well-conditioned systems") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto A = gen_randsvd(40, 6, 3.0, seed);
    Rng rng(seed);
    const auto b = random_vector(40, rng);
    KrylovConfig cfg{1e-12, 50, Precondition::None, false};
    const auto res = lsqr(A, std::span<const double>(b), cfg, nullptr);
    CHECK(res.iters <= 8);
    const auto ref = qr_least_squares(qr_factor(A), std::span<const double>(b));
    CHECK(diff_norm(res.x, ref) <= 1e-10 * norm2(ref));
  }
}

TEST_CASE("left-preconditioned LSQR gives the minimum-norm solution of A^T y = g") {
  const auto A = gen_randsvd(60, 5, 1e3, 4);
  Rng rng(4);
  const auto g = random_vector(5, rng);
  const auto pre = build_sketch_preconditioner(A, 4);
  KrylovConfig cfg{1e-14, 10, Precondition::SketchLeft, false};
  const auto res = lsqr(A, std::span<const double>(g), cfg, &pre, LsqrSide::Left);
  const auto ref = qr_min_norm(qr_factor(A), std::span<const double>(g));
  REQUIRE(res.x.size() == 60);
  CHECK(diff_norm(res.x, ref) <= 1e-10 * norm2(ref));
}

TEST_CASE("GMRES on the augmented system agrees with the direct solve") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto A = gen_randsvd(30, 4, std::pow(10.0, static_cast<double>(seed % 3)), seed);
    Rng rng(seed + 7);
    const auto f = random_vector(30, rng), g = random_vector(4, rng);
    const auto pre = build_sketch_preconditioner(A, seed);
    const auto cfg = default_gmres_config(0x1p-53);
    const auto qr = qr_factor(A);
    for (double alpha : {1.0, 0.3}) {
      KrylovConfig c = cfg;
      c.record_iters = true;
      const auto res = gmres_augmented(A, &pre, std::span<const double>(f), std::span<const double>(g), alpha, c);
      const auto ref = solve_augmented_qr(std::span<const double>(f), std::span<const double>(g), qr, alpha);
      CHECK(res.flag == KrylovFlag::Converged);
      CHECK(diff_norm(res.delta_r, ref.delta_r) <= 1e-10 * norm2(ref.delta_r));
      CHECK(diff_norm(res.delta_x, ref.delta_x) <= 1e-10 * norm2(ref.delta_x));
      REQUIRE(res.residual_history.size() == static_cast<std::size_t>(res.iters) + 1);
      for (std::size_t k = 1; k < res.residual_history.size(); ++k)
        CHECK(res.residual_history[k] <= res.residual_history[k - 1] * (1 + 1e-12));
    }
  }
}

TEST_CASE("GMRES zero right-hand side") {
  const auto A = gen_randsvd(30, 4, 10, 1);
  const auto pre = build_sketch_preconditioner(A, 1);
  const std::vector<double> f(30, 0.0), g(4, 0.0);
  const auto res = gmres_augmented(A, &pre, std::span<const double>(f), std::span<const double>(g), 1.0,
                                   default_gmres_config(0x1p-53));
  CHECK(res.iters == 0);
  CHECK(res.delta_r == f);
  CHECK(res.delta_x == g);
  CHECK_THROWS_AS(gmres_augmented(A, &pre, std::span<const double>(f), std::span<const double>(g), 0.0,
                                  default_gmres_config(0x1p-53)),
                  ConfigError);
}

TEST_CASE("GMRES residual history is nonincreasing at single precision") {
  const auto Ad = gen_randsvd(200, 6, 1e5, 3);
  const auto A = cast_matrix<float>(Ad);
  Rng rng(3);
  std::vector<float> f(200), g(6);
  for (auto& e : f) e = static_cast<float>(rng.normal());
  for (auto& e : g) e = static_cast<float>(rng.normal());
  const auto pre = build_sketch_preconditioner(A, 3);
  auto cfg = default_gmres_config(0x1p-24);
  cfg.record_iters = true;
  const auto res = gmres_augmented(A, &pre, std::span<const float>(f), std::span<const float>(g), 1.0f, cfg);
  for (std::size_t k = 1; k < res.residual_history.size(); ++k)
    CHECK(res.residual_history[k] <= res.residual_history[k - 1] * (1 + 1e-6));
}

TEST_CASE("sketch preconditioner on orthonormal columns") {
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto A = gen_randsvd(500, 10, 1.0, seed);
    const auto pre = build_sketch_preconditioner(A, seed);
    CHECK(pre.sketch_rows == 40);
    CHECK_FALSE(pre.undersampled);
    if (preconditioned_kappa(A, pre.R_s) <= 3.0) ++good;
  }
  CHECK(good >= 9);
}

TEST_CASE("sketch preconditioner quality gate over the kappa grid") {
  for (int ki = 1; ki <= 8; ++ki) {
    const double kappa = std::pow(10.0, ki);
    const auto A = gen_randsvd(1000, 10, kappa, derive_seed(1, static_cast<std::uint64_t>(ki)));
    const auto pre = build_sketch_preconditioner(A, 7);
    CHECK(preconditioned_kappa(A, pre.R_s) <= 10.0);
    if (ki <= 6) {
      const auto Af = cast_matrix<float>(A);
      const auto pf = build_sketch_preconditioner(Af, 7);
      CHECK(preconditioned_kappa(Af, pf.R_s) <= 10.0);
    }
  }
}

TEST_CASE("sketch preconditioner is deterministic given the seed") {
  const auto A = gen_randsvd(100, 5, 1e3, 2);
  const auto a = build_sketch_preconditioner(A, 17);
  const auto b = build_sketch_preconditioner(A, 17);
  const auto c = build_sketch_preconditioner(A, 18);
  CHECK(a.R_s == b.R_s);
  CHECK_FALSE(a.R_s == c.R_s);
  const auto small = build_sketch_preconditioner(gen_randsvd(12, 5, 10, 1), 1);
  CHECK(small.undersampled);
}

TEST_CASE("rank-deficient sketch input fails after retries") {
  Matrix<double> A(50, 3);
  for (std::size_t i = 0; i < 50; ++i) A(i, 0) = A(i, 2) = 1.0 + static_cast<double>(i);
  for (std::size_t i = 0; i < 50; ++i) A(i, 1) = 0.0;
  CHECK_THROWS_AS(build_sketch_preconditioner(A, 1), RankDeficient);
}
