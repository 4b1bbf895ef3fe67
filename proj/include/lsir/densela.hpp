#pragma once

// Dense kernels in a caller-chosen precision T: Householder QR, application
// of the orthogonal factor, triangular solves, one-sided Jacobi SVD and the
// QR-based solve of the augmented (saddle-point) system.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "lsir/matrix.hpp"

namespace lsir {

/// Householder QR, A = Q [R; 0]. Reflector j is H_j = I - tau_j v_j v_j^T
/// with v_j(j) = 1 implicit; v_j(j+1:m) is stored below the diagonal of
/// `reflectors`. Q = H_0 H_1 ... H_{n-1}.
template <typename T>
struct QrFactors {
  Matrix<T> reflectors;  // m x n; strictly-lower part holds the vectors
  Vector<T> tau;         // n coefficients
  Matrix<T> R;           // n x n upper triangular, nonnegative diagonal

  std::size_t rows() const { return reflectors.rows(); }
  std::size_t cols() const { return reflectors.cols(); }
};

template <typename T>
struct AugmentedSolveResult {
  Vector<T> delta_r;
  Vector<T> delta_x;
};

template <typename T>
QrFactors<T> qr_factor(const Matrix<T>& A) {
  using std::abs;
  using std::sqrt;
  const std::size_t m = A.rows(), n = A.cols();
  require_dims(m >= n && n >= 1, "qr_factor: requires m >= n >= 1");
  QrFactors<T> f{A, Vector<T>(n, T(0)), Matrix<T>(n, n)};
  Matrix<T>& W = f.reflectors;
  for (std::size_t j = 0; j < n; ++j) {
    auto c = W.col(j);
    const T norm = norm2(std::span<const T>(c.subspan(j)));
    if (!(norm > T(0))) throw RankDeficient("qr_factor: column " + std::to_string(j) + " has zero norm");
    const T x0 = c[j];
    const T sigma = norm2(std::span<const T>(c.subspan(j + 1)));
    const T sigma2 = sigma * sigma;
    // Reflector mapping the column onto +norm e_j (Parlett's choice for x0 > 0
    // avoids cancellation), so R gets a nonnegative diagonal.
    T v0;
    if (sigma == T(0) && x0 >= T(0)) {
      f.tau[j] = T(0);
      v0 = T(1);
    } else {
      v0 = x0 <= T(0) ? x0 - norm : -sigma2 / (x0 + norm);
      f.tau[j] = T(2) * v0 * v0 / (sigma2 + v0 * v0);
    }
    for (std::size_t i = j + 1; i < m; ++i) c[i] /= v0;
    c[j] = norm;
    const T tau = f.tau[j];
    if (tau != T(0)) {
      for (std::size_t k = j + 1; k < n; ++k) {
        auto d = W.col(k);
        T s = d[j];
        for (std::size_t i = j + 1; i < m; ++i) s += c[i] * d[i];
        s *= tau;
        d[j] -= s;
        for (std::size_t i = j + 1; i < m; ++i) d[i] -= s * c[i];
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) f.R(i, j) = W(i, j);
  return f;
}

/// Q^T v by sequential reflector application.
template <typename T>
Vector<T> apply_qt(const QrFactors<T>& f, std::span<const T> v) {
  const std::size_t m = f.rows(), n = f.cols();
  require_dims(v.size() == m, "apply_qt: dimension mismatch");
  Vector<T> y(v.begin(), v.end());
  for (std::size_t j = 0; j < n; ++j) {
    const T tau = f.tau[j];
    if (tau == T(0)) continue;
    auto c = f.reflectors.col(j);
    T s = y[j];
    for (std::size_t i = j + 1; i < m; ++i) s += c[i] * y[i];
    s *= tau;
    y[j] -= s;
    for (std::size_t i = j + 1; i < m; ++i) y[i] -= s * c[i];
  }
  return y;
}

/// Q v, reflectors applied in reverse order.
template <typename T>
Vector<T> apply_q(const QrFactors<T>& f, std::span<const T> v) {
  const std::size_t m = f.rows(), n = f.cols();
  require_dims(v.size() == m, "apply_q: dimension mismatch");
  Vector<T> y(v.begin(), v.end());
  for (std::size_t jj = n; jj-- > 0;) {
    const T tau = f.tau[jj];
    if (tau == T(0)) continue;
    auto c = f.reflectors.col(jj);
    T s = y[jj];
    for (std::size_t i = jj + 1; i < m; ++i) s += c[i] * y[i];
    s *= tau;
    y[jj] -= s;
    for (std::size_t i = jj + 1; i < m; ++i) y[i] -= s * c[i];
  }
  return y;
}

/// Explicit Q_1 (first n columns of Q), m x n.
template <typename T>
Matrix<T> materialize_q1(const QrFactors<T>& f) {
  const std::size_t m = f.rows(), n = f.cols();
  Matrix<T> Q(m, n);
  Vector<T> e(m, T(0));
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), T(0));
    e[j] = T(1);
    const auto q = apply_q(f, std::span<const T>(e));
    std::copy(q.begin(), q.end(), Q.col(j).begin());
  }
  return Q;
}

/// Solves R x = y, or R^T x = y when `transposed`.
template <typename T>
Vector<T> tri_solve(const Matrix<T>& R, std::span<const T> y, bool transposed = false) {
  const std::size_t n = R.rows();
  require_dims(R.cols() == n && y.size() == n, "tri_solve: dimension mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (R(i, i) == T(0)) throw SingularTriangular("tri_solve: zero diagonal at " + std::to_string(i));
  Vector<T> x(y.begin(), y.end());
  if (!transposed) {
    for (std::size_t ii = n; ii-- > 0;) {
      T s = x[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= R(ii, k) * x[k];
      x[ii] = s / R(ii, ii);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      T s = x[i];
      for (std::size_t k = 0; k < i; ++k) s -= R(k, i) * x[k];
      x[i] = s / R(i, i);
    }
  }
  return x;
}

/// Least-squares solution R^{-1} (Q^T b)(0:n).
template <typename T>
Vector<T> qr_least_squares(const QrFactors<T>& f, std::span<const T> b) {
  auto k = apply_qt(f, b);
  k.resize(f.cols());
  return tri_solve(f.R, std::span<const T>(k));
}

/// Minimum-norm solution of the underdetermined A^T y = g: y = Q [R^{-T} g; 0].
template <typename T>
Vector<T> qr_min_norm(const QrFactors<T>& f, std::span<const T> g) {
  require_dims(g.size() == f.cols(), "qr_min_norm: dimension mismatch");
  auto h = tri_solve(f.R, g, true);
  Vector<T> z(f.rows(), T(0));
  std::copy(h.begin(), h.end(), z.begin());
  return apply_q(f, std::span<const T>(z));
}

/// Solves [[alpha I, A], [A^T, 0]] (s, dx) = (f, g / alpha) and returns
/// (dr, dx) = (alpha s, dx), which is the solution of the unscaled system
/// [[I, A], [A^T, 0]] (dr, dx) = (f, g). With alpha = 1 this is
///   h = R^{-T} g,  k = Q^T f,  dr = Q [h; k2],  dx = R^{-1} (k1 - h).
template <typename T>
AugmentedSolveResult<T> solve_augmented_qr(std::span<const T> f, std::span<const T> g,
                                           const QrFactors<T>& qr, T alpha = T(1)) {
  const std::size_t m = qr.rows(), n = qr.cols();
  require_dims(f.size() == m && g.size() == n, "solve_augmented_qr: dimension mismatch");
  Vector<T> gs(g.begin(), g.end());
  if (alpha != T(1))
    for (auto& v : gs) v /= alpha;
  const auto h = tri_solve(qr.R, std::span<const T>(gs), true);
  auto k = apply_qt(qr, f);

  Vector<T> k1(k.begin(), k.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i) k1[i] -= alpha * h[i];
  auto dx = tri_solve(qr.R, std::span<const T>(k1));

  // s = Q [h; k2 / alpha], dr = alpha s = Q [alpha h; k2].
  for (std::size_t i = 0; i < n; ++i) k[i] = alpha * h[i];
  auto dr = apply_q(qr, std::span<const T>(k));
  return {std::move(dr), std::move(dx)};
}

/// Singular values (descending) of a square matrix by one-sided Jacobi.
/// Intended for the small triangular factors produced above.
template <typename T>
Vector<T> svd_of_r(const Matrix<T>& R, int max_sweeps = 60) {
  using std::abs;
  using std::sqrt;
  const std::size_t n = R.cols();
  require_dims(R.rows() == n, "svd_of_r: matrix must be square");
  Matrix<T> U = R;
  const T tol = T(unit_roundoff_v<T> * static_cast<double>(n));
  bool converged = n <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        auto up = U.col(p);
        auto uq = U.col(q);
        T alpha(0), beta(0), gamma(0);
        for (std::size_t i = 0; i < n; ++i) {
          alpha += up[i] * up[i];
          beta += uq[i] * uq[i];
          gamma += up[i] * uq[i];
        }
        if (gamma == T(0) || abs(gamma) <= tol * sqrt(alpha * beta)) continue;
        converged = false;
        const T zeta = (beta - alpha) / (T(2) * gamma);
        const T sgn = zeta >= T(0) ? T(1) : T(-1);
        const T t = sgn / (abs(zeta) + sqrt(T(1) + zeta * zeta));
        const T c = T(1) / sqrt(T(1) + t * t);
        const T s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const T a = up[i], b = uq[i];
          up[i] = c * a - s * b;
          uq[i] = s * a + c * b;
        }
      }
  }
  if (!converged) throw NoConvergence("svd_of_r: Jacobi sweep budget exhausted");
  Vector<T> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = norm2(std::span<const T>(U.col(j)));
  std::sort(sv.begin(), sv.end(), [](const T& a, const T& b) { return a > b; });
  return sv;
}

/// Q~ R^ reconstructed from the stored factors (testing aid).
template <typename T>
Matrix<T> reconstruct(const QrFactors<T>& f) {
  const std::size_t m = f.rows(), n = f.cols();
  Matrix<T> A(m, n);
  Vector<T> z(m);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(z.begin(), z.end(), T(0));
    for (std::size_t i = 0; i <= j; ++i) z[i] = f.R(i, j);
    const auto a = apply_q(f, std::span<const T>(z));
    std::copy(a.begin(), a.end(), A.col(j).begin());
  }
  return A;
}

/// Condition number sigma_max / sigma_min of A from the R factor of its QR.
template <typename T>
double condition_number(const Matrix<T>& A) {
  const auto sv = svd_of_r(qr_factor(A).R);
  return as_double(sv.front()) / as_double(sv.back());
}

}  // namespace lsir
