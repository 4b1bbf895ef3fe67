#pragma once

// Dense column-major matrix and the vector helpers shared by every kernel.
// Everything is templated on the scalar so the same code runs at binary32,
// binary64 and double-word precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lsir/dword.hpp"
#include "lsir/errors.hpp"

namespace lsir {

template <typename T>
using Vector = std::vector<T>;

template <typename T>
struct scalar_traits;

template <>
struct scalar_traits<float> {
  static constexpr double unit_roundoff = 0x1p-24;
  static constexpr const char* name = "single";
};
template <>
struct scalar_traits<double> {
  static constexpr double unit_roundoff = 0x1p-53;
  static constexpr const char* name = "double";
};
template <>
struct scalar_traits<dword> {
  static constexpr double unit_roundoff = 0x1p-106;
  static constexpr const char* name = "dword";
};

template <typename T>
constexpr double unit_roundoff_v = scalar_traits<T>::unit_roundoff;

/// Rounds a scalar of any supported type to T.
template <typename T, typename U>
T to(U v) {
  if constexpr (std::is_same_v<T, U>) {
    return v;
  } else if constexpr (std::is_same_v<U, dword>) {
    return static_cast<T>(v);
  } else {
    return T(v);
  }
}

/// Value as binary64 (used for norms and reporting).
template <typename T>
double as_double(T v) {
  return static_cast<double>(v);
}

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  static Matrix identity(std::size_t n) {
    Matrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = T(1);
    return I;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<T> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const T> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T, typename U>
Matrix<T> cast_matrix(const Matrix<U>& A) {
  Matrix<T> B(A.rows(), A.cols());
  auto src = A.data();
  auto dst = B.data();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = to<T>(src[k]);
  return B;
}

template <typename T, typename U>
Vector<T> cast_vector(std::span<const U> v) {
  Vector<T> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = to<T>(v[k]);
  return out;
}

template <typename T, typename U>
Vector<T> cast_vector(const Vector<U>& v) {
  return cast_vector<T>(std::span<const U>(v));
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  require_dims(a.size() == b.size(), "dot: length mismatch");
  T s(0);
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// Euclidean norm with scaling against overflow, evaluated in T.
template <typename T>
T norm2(std::span<const T> v) {
  using std::abs;
  using std::sqrt;
  T scale(0);
  for (const T& x : v) scale = std::max(scale, T(abs(x)));
  if (scale == T(0)) return T(0);
  T s(0);
  for (const T& x : v) {
    const T y = x / scale;
    s += y * y;
  }
  return scale * sqrt(s);
}

template <typename T>
T norm2(const Vector<T>& v) {
  return norm2(std::span<const T>(v));
}

/// ||a - b||_2 evaluated in double-word, reported as binary64. Used for
/// error measurement so the metric itself adds no visible rounding.
template <typename T, typename U>
double diff_norm(std::span<const T> a, std::span<const U> b) {
  require_dims(a.size() == b.size(), "diff_norm: length mismatch");
  Vector<dword> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = to<dword>(a[k]) - to<dword>(b[k]);
  return as_double(norm2(std::span<const dword>(d)));
}

template <typename T, typename U>
double diff_norm(const Vector<T>& a, const Vector<U>& b) {
  return diff_norm(std::span<const T>(a), std::span<const U>(b));
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  require_dims(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

/// y = A x, column-oriented accumulation in T.
template <typename T>
Vector<T> matvec(const Matrix<T>& A, std::span<const T> x) {
  require_dims(A.cols() == x.size(), "matvec: dimension mismatch");
  Vector<T> y(A.rows(), T(0));
  for (std::size_t j = 0; j < A.cols(); ++j) {
    const T xj = x[j];
    auto a = A.col(j);
    for (std::size_t i = 0; i < A.rows(); ++i) y[i] += a[i] * xj;
  }
  return y;
}

/// y = A^T x in T.
template <typename T>
Vector<T> matvec_t(const Matrix<T>& A, std::span<const T> x) {
  require_dims(A.rows() == x.size(), "matvec_t: dimension mismatch");
  Vector<T> y(A.cols(), T(0));
  for (std::size_t j = 0; j < A.cols(); ++j) {
    auto a = A.col(j);
    T s(0);
    for (std::size_t i = 0; i < A.rows(); ++i) s += a[i] * x[i];
    y[j] = s;
  }
  return y;
}

template <typename T>
Matrix<T> matmul(const Matrix<T>& A, const Matrix<T>& B) {
  require_dims(A.cols() == B.rows(), "matmul: dimension mismatch");
  Matrix<T> C(A.rows(), B.cols());
  for (std::size_t j = 0; j < B.cols(); ++j)
    for (std::size_t k = 0; k < A.cols(); ++k) {
      const T bkj = B(k, j);
      if (bkj == T(0)) continue;
      for (std::size_t i = 0; i < A.rows(); ++i) C(i, j) += A(i, k) * bkj;
    }
  return C;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& A) {
  Matrix<T> B(A.cols(), A.rows());
  for (std::size_t j = 0; j < A.cols(); ++j)
    for (std::size_t i = 0; i < A.rows(); ++i) B(j, i) = A(i, j);
  return B;
}

template <typename T>
double frobenius_norm(const Matrix<T>& A) {
  return as_double(norm2(A.data()));
}

}  // namespace lsir
