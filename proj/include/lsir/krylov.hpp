#pragma once

// Iterative correction solvers: LSQR for the least-squares subproblems,
// full GMRES for the split-preconditioned augmented system, and the
// Gaussian-sketch preconditioner both rely on.

#include <cmath>
#include <cstdint>
#include <optional>
#include <type_traits>
#include <span>
#include <utility>

#include "lsir/densela.hpp"
#include "lsir/matrix.hpp"
#include "lsir/probgen.hpp"

namespace lsir {

enum class Precondition { None, SketchRight, SketchLeft, SketchSplitAugmented };

struct KrylovConfig {
  double tol = 1e-7;
  int max_iters = 10;
  Precondition precondition = Precondition::SketchRight;
  bool record_iters = false;

  void validate() const {
    if (!(tol > 0.0)) throw ConfigError("KrylovConfig: tol must be positive");
    if (max_iters < 1) throw ConfigError("KrylovConfig: max_iters must be >= 1");
  }
};

/// Inner-solver settings per working precision: LSQR 1e-14 / 1e-7 capped at
/// n iterations, GMRES 1e-12 / 1e-6 capped at 50.
KrylovConfig default_lsqr_config(double u, std::size_t n);
KrylovConfig default_gmres_config(double u);

enum class KrylovFlag { Converged, MaxIterations, Breakdown };

template <typename T>
struct SketchPreconditioner {
  Matrix<T> R_s;  // n x n upper triangular
  std::size_t sketch_rows = 0;
  bool undersampled = false;  // 4n > m
};

/// R factor of the economic QR of Omega A, Omega = (4n)^{-1/2} G with G a
/// 4n x m standard Gaussian matrix, all at precision T. A rank-deficient
/// sketch is redrawn up to three times.
template <typename T>
SketchPreconditioner<T> build_sketch_preconditioner(const Matrix<T>& A, std::uint64_t seed) {
  const std::size_t m = A.rows(), n = A.cols();
  const std::size_t k = 4 * n;
  SketchPreconditioner<T> pre;
  pre.sketch_rows = k;
  pre.undersampled = k > m;
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Rng rng(attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    Matrix<T> Omega(k, m);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < k; ++i) Omega(i, j) = to<T>(scale * rng.normal());
    try {
      pre.R_s = qr_factor(matmul(Omega, A)).R;
      for (std::size_t i = 0; i < n; ++i)
        if (!(pre.R_s(i, i) > T(0))) throw RankDeficient("sketch: zero diagonal");
      return pre;
    } catch (const RankDeficient&) {
      if (attempt == 3) throw;
    }
  }
  throw RankDeficient("build_sketch_preconditioner: sketch rank deficient");
}

template <typename T>
struct LsqrResult {
  Vector<T> x;
  int iters = 0;
  KrylovFlag flag = KrylovFlag::MaxIterations;
  Vector<double> residual_history;  // ||r_k|| estimates when recorded
};

/// Golub-Kahan LSQR for min ||b - op x||. `op(v)` returns op v and
/// `op_t(u)` returns op^T u. Stops when the incompatible-system estimate
/// ||op^T r|| / (||op|| ||r||) or the compatible-system ratio ||r|| / ||b||
/// falls below tol.
template <typename T, typename Op, typename OpT>
LsqrResult<T> lsqr_operator(Op&& op, OpT&& op_t, std::span<const T> b, std::size_t ncols,
                            const KrylovConfig& cfg) {
  using std::abs;
  using std::sqrt;
  cfg.validate();
  const T tol = to<T>(cfg.tol);
  LsqrResult<T> res;
  res.x.assign(ncols, T(0));

  Vector<T> u(b.begin(), b.end());
  T beta = norm2(std::span<const T>(u));
  const T bnorm = beta;
  if (beta == T(0)) {
    res.flag = KrylovFlag::Converged;
    return res;
  }
  for (auto& v : u) v /= beta;
  Vector<T> v = op_t(std::span<const T>(u));
  T alpha = norm2(std::span<const T>(v));
  if (alpha == T(0)) {
    res.flag = KrylovFlag::Converged;
    return res;
  }
  for (auto& e : v) e /= alpha;

  Vector<T> w = v;
  T phibar = beta;
  T rhobar = alpha;
  T anorm2(0);
  if (cfg.record_iters) res.residual_history.push_back(as_double(phibar));

  for (int it = 1; it <= cfg.max_iters; ++it) {
    res.iters = it;
    auto Av = op(std::span<const T>(v));
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = Av[i] - alpha * u[i];
    beta = norm2(std::span<const T>(u));
    anorm2 += alpha * alpha + beta * beta;
    const T alpha_prev = alpha;
    if (beta > T(0)) {
      for (auto& e : u) e /= beta;
      auto Atu = op_t(std::span<const T>(u));
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = Atu[j] - beta * v[j];
      alpha = norm2(std::span<const T>(v));
      if (alpha > T(0))
        for (auto& e : v) e /= alpha;
    } else {
      alpha = T(0);
    }
    (void)alpha_prev;

    const T rho = sqrt(rhobar * rhobar + beta * beta);
    const T c = rhobar / rho;
    const T s = beta / rho;
    const T theta = s * alpha;
    rhobar = -c * alpha;
    const T phi = c * phibar;
    phibar = s * phibar;

    const T t1 = phi / rho;
    const T t2 = -theta / rho;
    for (std::size_t j = 0; j < ncols; ++j) {
      res.x[j] += t1 * w[j];
      w[j] = v[j] + t2 * w[j];
    }

    const T rnorm = phibar;
    const T arnorm = phibar * alpha * abs(c);
    const T anorm = sqrt(anorm2);
    if (cfg.record_iters) res.residual_history.push_back(as_double(rnorm));
    if (rnorm <= tol * bnorm || arnorm <= tol * anorm * rnorm) {
      res.flag = KrylovFlag::Converged;
      return res;
    }
    if (beta == T(0) || alpha == T(0)) {
      res.flag = KrylovFlag::Breakdown;
      return res;
    }
  }
  res.flag = KrylovFlag::MaxIterations;
  return res;
}

enum class LsqrSide { Right, Left };

/// Right: min ||b - A x|| via z-iteration on A R_s^{-1}, x = R_s^{-1} z.
/// Left: minimum-norm solution of min ||b - A^T y|| (b has n entries),
/// iterating on R_s^{-T} A^T with right-hand side R_s^{-T} b.
template <typename T>
LsqrResult<T> lsqr(const Matrix<T>& A, std::span<const T> b, const KrylovConfig& cfg,
                   const SketchPreconditioner<std::type_identity_t<T>>* pre, LsqrSide side = LsqrSide::Right) {
  const std::size_t m = A.rows(), n = A.cols();
  const Matrix<T>* R = pre ? &pre->R_s : nullptr;
  auto rsolve = [&](std::span<const T> v, bool tr) {
    return R ? tri_solve(*R, v, tr) : Vector<T>(v.begin(), v.end());
  };
  if (side == LsqrSide::Right) {
    require_dims(b.size() == m, "lsqr: right-hand side length mismatch");
    auto op = [&](std::span<const T> z) {
      const auto x = rsolve(z, false);
      return matvec(A, std::span<const T>(x));
    };
    auto op_t = [&](std::span<const T> y) {
      const auto t = matvec_t(A, y);
      return rsolve(std::span<const T>(t), true);
    };
    auto res = lsqr_operator<T>(op, op_t, b, n, cfg);
    res.x = rsolve(std::span<const T>(res.x), false);
    return res;
  }
  require_dims(b.size() == n, "lsqr: right-hand side length mismatch");
  auto op = [&](std::span<const T> y) {
    const auto t = matvec_t(A, y);
    return rsolve(std::span<const T>(t), true);
  };
  auto op_t = [&](std::span<const T> z) {
    const auto x = rsolve(z, false);
    return matvec(A, std::span<const T>(x));
  };
  const auto rhs = rsolve(b, true);
  return lsqr_operator<T>(op, op_t, std::span<const T>(rhs), m, cfg);
}

template <typename T>
struct GmresResult {
  Vector<T> delta_r;
  Vector<T> delta_x;
  int iters = 0;
  KrylovFlag flag = KrylovFlag::MaxIterations;
  Vector<double> residual_history;  // preconditioned residual norms, iteration 0 first
};

/// Full (unrestarted) GMRES with modified Gram-Schmidt and a second
/// orthogonalization pass when the norm drops below 0.7 of its value
/// before projection. x0 = 0. Stops when ||r_k|| <= tol ||rhs||.
template <typename T, typename Op>
std::pair<Vector<T>, GmresResult<T>> gmres_operator(Op&& op, std::span<const T> rhs, const KrylovConfig& cfg) {
  using std::abs;
  using std::sqrt;
  cfg.validate();
  const std::size_t N = rhs.size();
  GmresResult<T> res;
  Vector<T> sol(N, T(0));
  const T beta = norm2(rhs);
  res.residual_history.push_back(as_double(beta));
  if (beta == T(0)) {
    res.flag = KrylovFlag::Converged;
    return {std::move(sol), std::move(res)};
  }
  const T target = to<T>(cfg.tol) * beta;
  const std::size_t kmax = static_cast<std::size_t>(cfg.max_iters);

  std::vector<Vector<T>> V;
  V.reserve(kmax + 1);
  V.emplace_back(rhs.begin(), rhs.end());
  for (auto& e : V[0]) e /= beta;
  std::vector<Vector<T>> H;  // column k has k + 2 entries
  Vector<T> cs, sn, gvec{beta};

  std::size_t k = 0;
  bool done = false;
  while (k < kmax && !done) {
    Vector<T> w = op(std::span<const T>(V[k]));
    Vector<T> h(k + 2, T(0));
    const T before = norm2(std::span<const T>(w));
    for (std::size_t i = 0; i <= k; ++i) {
      const T hij = dot(std::span<const T>(w), std::span<const T>(V[i]));
      h[i] = hij;
      for (std::size_t l = 0; l < N; ++l) w[l] -= hij * V[i][l];
    }
    T after = norm2(std::span<const T>(w));
    if (after < T(0.7) * before) {
      for (std::size_t i = 0; i <= k; ++i) {
        const T corr = dot(std::span<const T>(w), std::span<const T>(V[i]));
        h[i] += corr;
        for (std::size_t l = 0; l < N; ++l) w[l] -= corr * V[i][l];
      }
      after = norm2(std::span<const T>(w));
    }
    h[k + 1] = after;

    for (std::size_t i = 0; i < k; ++i) {
      const T t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const T denom = sqrt(h[k] * h[k] + h[k + 1] * h[k + 1]);
    const T c = denom == T(0) ? T(1) : h[k] / denom;
    const T s = denom == T(0) ? T(0) : h[k + 1] / denom;
    cs.push_back(c);
    sn.push_back(s);
    h[k] = c * h[k] + s * h[k + 1];
    h[k + 1] = T(0);
    gvec.push_back(-s * gvec[k]);
    gvec[k] = c * gvec[k];
    H.push_back(std::move(h));
    ++k;

    const T resid = abs(gvec[k]);
    res.residual_history.push_back(as_double(resid));
    if (resid <= target) {
      res.flag = KrylovFlag::Converged;
      done = true;
    } else if (after == T(0)) {
      res.flag = KrylovFlag::Breakdown;
      done = true;
    } else {
      for (auto& e : w) e /= after;
      V.push_back(std::move(w));
    }
  }
  res.iters = static_cast<int>(k);
  if (!done) res.flag = KrylovFlag::MaxIterations;

  Vector<T> y(k, T(0));
  for (std::size_t ii = k; ii-- > 0;) {
    T s = gvec[ii];
    for (std::size_t j = ii + 1; j < k; ++j) s -= H[j][ii] * y[j];
    y[ii] = H[ii][ii] == T(0) ? T(0) : s / H[ii][ii];
  }
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = 0; l < N; ++l) sol[l] += y[j] * V[j][l];
  return {std::move(sol), std::move(res)};
}

/// GMRES on diag(I, R_s^T)^{-1} [[alpha I, A], [A^T, 0]] diag(I, R_s)^{-1}
/// with unknown (s, R_s dx) and right-hand side (f, R_s^{-T} g / alpha);
/// returns dr = alpha s and dx = R_s^{-1} (R_s dx). Without a
/// preconditioner R_s = I.
template <typename T>
GmresResult<T> gmres_augmented(const Matrix<T>& A, const SketchPreconditioner<std::type_identity_t<T>>* pre, std::span<const T> f,
                               std::span<const T> g, T alpha, const KrylovConfig& cfg) {
  const std::size_t m = A.rows(), n = A.cols();
  require_dims(f.size() == m && g.size() == n, "gmres_augmented: dimension mismatch");
  if (!(alpha > T(0))) throw ConfigError("gmres_augmented: alpha must be positive");
  const Matrix<T>* R = pre ? &pre->R_s : nullptr;
  auto rsolve = [&](std::span<const T> v, bool tr) {
    return R ? tri_solve(*R, v, tr) : Vector<T>(v.begin(), v.end());
  };
  auto op = [&](std::span<const T> z) {
    Vector<T> out(m + n);
    const auto t = rsolve(z.subspan(m, n), false);
    const auto At = matvec(A, std::span<const T>(t));
    for (std::size_t i = 0; i < m; ++i) out[i] = alpha * z[i] + At[i];
    const auto Ats = matvec_t(A, z.first(m));
    const auto bottom = rsolve(std::span<const T>(Ats), true);
    std::copy(bottom.begin(), bottom.end(), out.begin() + static_cast<std::ptrdiff_t>(m));
    return out;
  };
  Vector<T> rhs(m + n);
  std::copy(f.begin(), f.end(), rhs.begin());
  Vector<T> gs(g.begin(), g.end());
  for (auto& e : gs) e /= alpha;
  const auto gp = rsolve(std::span<const T>(gs), true);
  std::copy(gp.begin(), gp.end(), rhs.begin() + static_cast<std::ptrdiff_t>(m));

  auto [sol, res] = gmres_operator<T>(op, std::span<const T>(rhs), cfg);
  res.delta_r.assign(m, T(0));
  for (std::size_t i = 0; i < m; ++i) res.delta_r[i] = alpha * sol[i];
  res.delta_x = rsolve(std::span<const T>(sol).subspan(m, n), false);
  return res;
}

}  // namespace lsir
