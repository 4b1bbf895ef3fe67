#pragma once

// Test problems with prescribed condition number and least-squares residual
// norm, plus the high-precision reference solution.

#include <cstdint>
#include <span>

#include "lsir/dword.hpp"
#include "lsir/matrix.hpp"
#include "lsir/precision.hpp"

namespace lsir {

/// xoshiro256** seeded through splitmix64. Bit-identical on every platform;
/// the floating-point draws below use only IEEE basic operations plus
/// std::log / std::sqrt / std::cos.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a base seed with grid indices into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

Matrix<double> gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// A = U diag(sigma) V^T with Haar U (m x n), V (n x n) and
/// sigma_i = kappa^{-(i-1)/(n-1)}, so ||A||_2 = 1 and kappa(A) = kappa.
Matrix<double> gen_randsvd(std::size_t m, std::size_t n, double kappa, std::uint64_t seed);

struct TruthSolution {
  Vector<dword> x_star;
  Vector<dword> r_star;
  int refinement_steps = 0;
};

/// Reference least-squares solution at double-word precision: double-word
/// Householder QR followed by augmented-system refinement whose residuals
/// are summed with SumK, so the result is accurate to a small multiple of
/// 2^-106 * kappa(A).
TruthSolution truth_oracle(const Matrix<double>& A, std::span<const dword> b);

struct RhsResult {
  Vector<dword> b;  // value exactly representable in the residual format
  Vector<dword> x_star;
  Vector<dword> r_star;
};

/// b = A y + e with y uniform(0,1) normalized, e in null(A^T) with
/// ||e||_2 = rnorm, formed at double-word precision and rounded to
/// `residual`; x_star and r_star are recomputed from the rounded b.
RhsResult gen_rhs(const Matrix<double>& A, double rnorm, std::uint64_t seed,
                  Format residual = Format::binary64);

struct LsProblem {
  Matrix<double> A;
  Vector<dword> b;
  Vector<dword> x_star;
  Vector<dword> r_star;
  double kappa_target = 1.0;
  double rnorm_target = 0.0;
  std::uint64_t seed = 0;
  Format residual = Format::binary64;

  std::size_t m() const { return A.rows(); }
  std::size_t n() const { return A.cols(); }
};

/// Full problem: randsvd matrix from `seed`, right-hand side from a stream
/// derived from it.
LsProblem make_problem(std::size_t m, std::size_t n, double kappa, double rnorm, std::uint64_t seed,
                       Format residual = Format::binary64);

/// b rounded to the given format and widened back to double-word.
Vector<dword> round_to_format(std::span<const dword> v, Format f);

}  // namespace lsir
