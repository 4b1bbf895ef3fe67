#pragma once

// The two precision levels of a refinement run and the arithmetic that
// crosses between them.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "lsir/dword.hpp"
#include "lsir/matrix.hpp"

namespace lsir {

enum class Format : std::uint8_t { binary32 = 1, binary64 = 2, dword = 3 };

double unit_roundoff(Format f);
std::string_view format_name(Format f);  // "single", "double", "dword"
Format parse_format(std::string_view s);

/// (working, residual) configuration. Working precision u is the one used
/// for factorizations, solves and updates; residual precision u_r for
/// b - Ax and A^T r.
struct PrecisionPair {
  Format working = Format::binary32;
  Format residual = Format::binary64;

  double u() const { return unit_roundoff(working); }
  double u_r() const { return unit_roundoff(residual); }

  /// Residual precision is at least as accurate as working precision and
  /// working precision is a hardware format.
  bool valid() const;
  /// The u_r <= u^2 precondition of the LS, semi-normal and augmented
  /// strategies.
  bool squared_residual() const { return u_r() <= u() * u(); }

  /// "double,single" style label: residual first.
  std::string label() const;
  static PrecisionPair parse(std::string_view s);

  friend bool operator==(const PrecisionPair&, const PrecisionPair&) = default;
};

/// Elementwise correctly rounded conversion to the working type.
template <typename W, typename R>
Vector<W> round_to_working(std::span<const R> v) {
  return cast_vector<W>(v);
}

template <typename W, typename R>
Vector<W> round_to_working(const Vector<R>& v) {
  return cast_vector<W>(v);
}

/// Sum of the given binary64 terms, accurate as if computed in four-fold
/// precision and rounded to double-word (Ogita-Rump-Oishi SumK, K = 4). The
/// input span is used as scratch and is overwritten.
dword accurate_sum(std::span<double> terms);

/// Dot product via exact TwoProd terms and accurate_sum.
dword compensated_dot(std::span<const double> a, std::span<const double> b);

/// r = b - A x with every product and sum rounded at the residual type R.
/// Row i accumulates b_i - a_i0 x_0 - a_i1 x_1 - ... left to right, so with
/// R == W this is exactly the plain working-precision evaluation.
template <typename R, typename W>
Vector<R> residual_matvec(const Matrix<R>& A, std::span<const W> x, std::span<const R> b) {
  require_dims(A.cols() == x.size() && A.rows() == b.size(), "residual_matvec: dimension mismatch");
  Vector<R> r(b.begin(), b.end());
  for (std::size_t j = 0; j < A.cols(); ++j) {
    const R xj = to<R>(x[j]);
    auto a = A.col(j);
    for (std::size_t i = 0; i < A.rows(); ++i) r[i] -= a[i] * xj;
  }
  return r;
}

/// A^T v in residual precision, each entry accumulated top to bottom.
template <typename R, typename V>
Vector<R> residual_matvec_t(const Matrix<R>& A, std::span<const V> v) {
  require_dims(A.rows() == v.size(), "residual_matvec_t: dimension mismatch");
  Vector<R> y(A.cols(), R(0));
  for (std::size_t j = 0; j < A.cols(); ++j) {
    auto a = A.col(j);
    R s(0);
    for (std::size_t i = 0; i < A.rows(); ++i) s += a[i] * to<R>(v[i]);
    y[j] = s;
  }
  return y;
}

/// b - s - A x for binary64 A and double-word b, x, s, accurate to about
/// 2^-106 relative to the result regardless of cancellation (beyond u^4 cond).
/// `s` may be empty, meaning zero.
Vector<dword> accurate_residual(const Matrix<double>& A, std::span<const dword> x,
                                std::span<const dword> b, std::span<const dword> s = {});

/// A^T v accurate in the same sense.
Vector<dword> accurate_matvec_t(const Matrix<double>& A, std::span<const dword> v);

}  // namespace lsir
