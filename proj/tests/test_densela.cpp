#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "dense_oracle.hpp"
#include "lsir/densela.hpp"
#include "lsir/probgen.hpp"

using namespace lsir;

namespace {

template <typename T>
Matrix<T> random_matrix(std::size_t m, std::size_t n, Rng& rng) {
  Matrix<T> A(m, n);
  for (auto& a : A.data()) a = static_cast<T>(rng.normal());
  return A;
}

template <typename T>
std::vector<T> random_vector(std::size_t m, Rng& rng) {
  std::vector<T> v(m);
  for (auto& e : v) e = static_cast<T>(rng.normal());
  return v;
}

template <typename T>
double max_diff(const std::vector<T>& a, const std::vector<T>& b) {
  return diff_norm(a, b);
}

}  // namespace

TEST_CASE("qr_factor examples") {
  const auto I = Matrix<double>::identity(2);
  const auto fI = qr_factor(I);
  CHECK(fI.R == I);
  CHECK(fI.tau[0] == 0.0);
  CHECK(fI.tau[1] == 0.0);

  Matrix<double> A(2, 1);
  A(0, 0) = 3;
  A(1, 0) = 4;
  const auto f = qr_factor(A);
  CHECK(f.R(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
  const std::vector<double> v{3, 4};
  const auto y = apply_qt(f, std::span<const double>(v));
  CHECK(y[0] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(std::fabs(y[1]) <= 1e-15);

  Matrix<double> Z(3, 2);
  Z(0, 0) = 1;
  CHECK_THROWS_AS(qr_factor(Z), RankDeficient);
  CHECK_THROWS_AS(qr_factor(Matrix<double>(2, 3)), DimensionMismatch);
}

TEST_CASE_TEMPLATE("QR backward stability and orthogonality over random instances", T, float, double, dword) {
  Rng rng(21);
  const double u = unit_roundoff_v<T>;
  for (int trial = 0; trial < (std::is_same_v<T, dword> ? 10 : 100); ++trial) {
    const std::size_t m = 5 + rng.next() % 60;
    const std::size_t n = 1 + rng.next() % std::min<std::size_t>(m, 12);
    const auto A = random_matrix<T>(m, n, rng);
    const auto f = qr_factor(A);
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(f.R(j, j) >= T(0));
      for (std::size_t i = j + 1; i < n; ++i) CHECK(f.R(i, j) == T(0));
    }
    const auto QR = reconstruct(f);
    std::vector<T> d(A.data().begin(), A.data().end());
    const double err = diff_norm(std::span<const T>(d), QR.data());
    CHECK(err <= 10.0 * m * n * u * frobenius_norm(A));

    const auto v = random_vector<T>(m, rng);
    const auto back = apply_q(f, std::span<const T>(apply_qt(f, std::span<const T>(v))));
    const double vn = as_double(norm2(v));
    CHECK(max_diff(back, v) <= 10.0 * m * u * vn);
    const auto qv = apply_qt(f, std::span<const T>(v));
    CHECK(std::fabs(as_double(norm2(qv)) - vn) <= 10.0 * m * u * vn);
  }
}

TEST_CASE("tri_solve examples") {
  Matrix<double> R(2, 2);
  R(0, 0) = 2;
  R(0, 1) = 1;
  R(1, 1) = 2;
  const std::vector<double> y{4, 2}, yt{2, 4};
  CHECK(tri_solve(R, std::span<const double>(y)) == std::vector<double>{1.5, 1});
  CHECK(tri_solve(R, std::span<const double>(yt), true) == std::vector<double>{1, 1.5});
  const auto I = Matrix<double>::identity(2);
  CHECK(tri_solve(I, std::span<const double>(y)) == y);
  R(1, 1) = 0;
  CHECK_THROWS_AS(tri_solve(R, std::span<const double>(y)), SingularTriangular);
}

TEST_CASE_TEMPLATE("tri_solve residual bound", T, float, double) {
  Rng rng(22);
  const double u = unit_roundoff_v<T>;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.next() % 15;
    const auto R = qr_factor(random_matrix<T>(n + 3, n, rng)).R;
    const auto y = random_vector<T>(n, rng);
    for (bool tr : {false, true}) {
      const auto x = tri_solve(R, std::span<const T>(y), tr);
      const auto Rx = tr ? matvec_t(R, std::span<const T>(x)) : matvec(R, std::span<const T>(x));
      const double normR = frobenius_norm(R);
      CHECK(max_diff(Rx, y) <= 2.0 * n * u * normR * as_double(norm2(x)));
    }
  }
}

TEST_CASE("augmented solve examples") {
  Rng rng(23);
  {
    const auto A = random_matrix<double>(8, 3, rng);
    const auto f = qr_factor(A);
    const std::vector<double> z8(8, 0.0), z3(3, 0.0);
    const auto s = solve_augmented_qr(std::span<const double>(z8), std::span<const double>(z3), f);
    CHECK(s.delta_r == z8);
    CHECK(s.delta_x == z3);
  }
  {
    // Square case: the k2 block is empty.
    const auto A = Matrix<double>::identity(4);
    const auto fa = qr_factor(A);
    const auto f = random_vector<double>(4, rng), g = random_vector<double>(4, rng);
    const auto s = solve_augmented_qr(std::span<const double>(f), std::span<const double>(g), fa);
    const auto ref = oracle::augmented_lu(A, f, g);
    for (std::size_t i = 0; i < 4; ++i) CHECK(s.delta_r[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    for (std::size_t j = 0; j < 4; ++j) CHECK(s.delta_x[j] == doctest::Approx(ref[4 + j]).epsilon(1e-14));
  }
}

TEST_CASE("augmented solve agrees with dense LU on 30x4 systems") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double kappa = std::pow(10.0, static_cast<double>(seed % 4));
    const auto A = gen_randsvd(30, 4, kappa, seed);
    Rng rng(seed + 100);
    const auto f = random_vector<double>(30, rng), g = random_vector<double>(4, rng);
    const auto fa = qr_factor(A);
    const auto ref = oracle::augmented_lu(A, f, g);
    const std::vector<double> ref_r(ref.begin(), ref.begin() + 30), ref_x(ref.begin() + 30, ref.end());
    for (double alpha : {1.0, 0.25, 1.0 / kappa}) {
      const auto s = solve_augmented_qr(std::span<const double>(f), std::span<const double>(g), fa, alpha);
      CHECK(diff_norm(s.delta_r, ref_r) <= 1e-10 * norm2(ref_r));
      CHECK(diff_norm(s.delta_x, ref_x) <= 1e-10 * norm2(ref_x));
    }
  }
}

TEST_CASE("least-squares and minimum-norm solves") {
  Rng rng(24);
  const auto A = random_matrix<double>(25, 4, rng);
  const auto f = qr_factor(A);
  const auto b = random_vector<double>(25, rng);
  const auto x = qr_least_squares(f, std::span<const double>(b));
  auto r = matvec(A, std::span<const double>(x));
  for (std::size_t i = 0; i < 25; ++i) r[i] = b[i] - r[i];
  const auto Atr = matvec_t(A, std::span<const double>(r));
  CHECK(norm2(Atr) <= 1e-13 * norm2(b));

  const auto g = random_vector<double>(4, rng);
  const auto y = qr_min_norm(f, std::span<const double>(g));
  CHECK(diff_norm(matvec_t(A, std::span<const double>(y)), g) <= 1e-13 * norm2(g));
  // Minimum norm means y lies in range(A): y = A A^+ y.
  const auto z = qr_least_squares(f, std::span<const double>(y));
  CHECK(diff_norm(matvec(A, std::span<const double>(z)), y) <= 1e-13 * norm2(y));
}

TEST_CASE("Jacobi SVD examples") {
  Matrix<double> D(2, 2);
  D(0, 0) = 1;
  D(1, 1) = 3;
  const auto s = svd_of_r(D);
  CHECK(s[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-15));

  Matrix<double> R(2, 2);
  R(0, 0) = R(0, 1) = R(1, 1) = 1;
  const auto p = svd_of_r(R);
  const double phi = std::numbers::phi;
  CHECK(p[0] == doctest::Approx(phi).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(1.0 / phi).epsilon(1e-14));

  const auto A = gen_randsvd(200, 8, 1e4, 3);
  const auto sv = svd_of_r(qr_factor(A).R);
  CHECK(sv.front() / sv.back() == doctest::Approx(1e4).epsilon(0.01));
  CHECK(condition_number(A) == doctest::Approx(1e4).epsilon(0.01));
}

TEST_CASE("materialized Q1 has orthonormal columns") {
  Rng rng(25);
  const auto A = random_matrix<double>(20, 5, rng);
  const auto Q = materialize_q1(qr_factor(A));
  const auto G = matmul(transpose(Q), Q);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::fabs(G(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-14);
}
