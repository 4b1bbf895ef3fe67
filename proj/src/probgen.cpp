#include "lsir/probgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lsir/densela.hpp"

namespace lsir {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t st = seed;
  for (auto& s : s_) s = splitmix64(st);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t st = base;
  std::uint64_t h = splitmix64(st);
  st = h ^ (a + 0x632BE59BD9B4E019ULL);
  h = splitmix64(st);
  st = h ^ (b + 0x85157AF5ULL);
  return splitmix64(st);
}

Matrix<double> gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix<double> G(rows, cols);
  for (auto& v : G.data()) v = rng.normal();
  return G;
}

Matrix<double> gen_randsvd(std::size_t m, std::size_t n, double kappa, std::uint64_t seed) {
  if (n < 1 || m < n) throw ConfigError("gen_randsvd: requires m >= n >= 1");
  if (!(kappa >= 1.0)) throw ConfigError("gen_randsvd: requires kappa >= 1");
  Rng rng(seed);
  const auto U = materialize_q1(qr_factor(gaussian_matrix(m, n, rng)));
  const auto V = materialize_q1(qr_factor(gaussian_matrix(n, n, rng)));

  Vector<double> sigma(n, 1.0);
  for (std::size_t i = 1; i < n; ++i)
    sigma[i] = std::pow(kappa, -static_cast<double>(i) / static_cast<double>(n - 1));

  Matrix<double> A(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      dword s(0.0);
      for (std::size_t k = 0; k < n; ++k) s += dword(U(i, k)) * dword(sigma[k] * V(j, k));
      A(i, j) = static_cast<double>(s);
    }
  return A;
}

TruthSolution truth_oracle(const Matrix<double>& A, std::span<const dword> b) {
  require_dims(A.rows() == b.size(), "truth_oracle: dimension mismatch");
  const auto qr = qr_factor(cast_matrix<dword>(A));

  TruthSolution t;
  Vector<dword> x = qr_least_squares(qr, b);
  Vector<dword> r = accurate_residual(A, std::span<const dword>(x), b);

  constexpr int kMinSteps = 3;
  constexpr int kMaxSteps = 10;
  constexpr double kFloor = 0x1p-103;
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 1; step <= kMaxSteps; ++step) {
    const auto f = accurate_residual(A, std::span<const dword>(x), b, std::span<const dword>(r));
    auto g = accurate_matvec_t(A, std::span<const dword>(r));
    for (auto& v : g) v = -v;
    const auto upd = solve_augmented_qr(std::span<const dword>(f), std::span<const dword>(g), qr);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += upd.delta_r[i];
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += upd.delta_x[j];
    t.refinement_steps = step;

    const double xn = as_double(norm2(x));
    const double dx = as_double(norm2(upd.delta_x)) / (xn > 0.0 ? xn : 1.0);
    if (dx > prev && dx > 1e-26) throw OracleDivergence("truth_oracle: refinement stopped contracting");
    prev = dx;
    if (step >= kMinSteps && dx <= kFloor) break;
  }
  t.r_star = accurate_residual(A, std::span<const dword>(x), b);
  t.x_star = std::move(x);
  return t;
}

Vector<dword> round_to_format(std::span<const dword> v, Format f) {
  Vector<dword> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    switch (f) {
      case Format::binary32: out[i] = dword(static_cast<float>(v[i])); break;
      case Format::binary64: out[i] = dword(static_cast<double>(v[i])); break;
      case Format::dword: out[i] = v[i]; break;
    }
  }
  return out;
}

RhsResult gen_rhs(const Matrix<double>& A, double rnorm, std::uint64_t seed, Format residual) {
  const std::size_t m = A.rows(), n = A.cols();
  if (!(rnorm >= 0.0)) throw ConfigError("gen_rhs: rnorm must be nonnegative");
  if (m == n && rnorm > 0.0)
    throw ConfigError("gen_rhs: square system has no nonzero residual; rnorm must be 0");
  Rng rng(seed);

  // Normalized in double-word so that y is not a binary64 vector.
  Vector<dword> y(n);
  for (auto& v : y) v = dword(rng.uniform());
  const dword ynorm = norm2(y);
  for (auto& v : y) v /= ynorm;

  const Matrix<dword> Ad = cast_matrix<dword>(A);
  Vector<dword> b = matvec(Ad, std::span<const dword>(y));

  if (rnorm > 0.0) {
    const auto qr = qr_factor(Ad);
    const auto Q1 = materialize_q1(qr);
    Vector<dword> e(m);
    for (std::size_t i = 0; i < m; ++i) e[i] = dword(rng.normal());
    // Two projection passes: the second removes what the first leaves behind.
    for (int pass = 0; pass < 2; ++pass) {
      const auto c = matvec_t(Q1, std::span<const dword>(e));
      const auto p = matvec(Q1, std::span<const dword>(c));
      for (std::size_t i = 0; i < m; ++i) e[i] -= p[i];
    }
    const dword scale = dword(rnorm) / norm2(e);
    for (std::size_t i = 0; i < m; ++i) b[i] += e[i] * scale;
  }

  RhsResult out;
  out.b = round_to_format(std::span<const dword>(b), residual);
  auto truth = truth_oracle(A, std::span<const dword>(out.b));
  out.x_star = std::move(truth.x_star);
  out.r_star = std::move(truth.r_star);
  return out;
}

LsProblem make_problem(std::size_t m, std::size_t n, double kappa, double rnorm, std::uint64_t seed,
                       Format residual) {
  LsProblem p;
  p.A = gen_randsvd(m, n, kappa, seed);
  auto rhs = gen_rhs(p.A, rnorm, derive_seed(seed, 0x5248), residual);
  p.b = std::move(rhs.b);
  p.x_star = std::move(rhs.x_star);
  p.r_star = std::move(rhs.r_star);
  p.kappa_target = kappa;
  p.rnorm_target = rnorm;
  p.seed = seed;
  p.residual = residual;
  return p;
}

}  // namespace lsir
