#pragma once

// Least-squares iterative refinement: the four correction strategies and
// the driver that runs them against a problem with known solution.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "lsir/densela.hpp"
#include "lsir/krylov.hpp"
#include "lsir/matrix.hpp"
#include "lsir/precision.hpp"
#include "lsir/probgen.hpp"

namespace lsir {

enum class Strategy { LeastSquares, SemiNormal, Augmented, Combined };
enum class Status { Converged, MaxIterations, Diverged, SolverFailure };
enum class StopRule { TrueError, UpdateNorm };
enum class SolverKind { DirectQR, Krylov };
enum class AlphaMode { Unit, Optimal, Given };

std::string_view strategy_name(Strategy s);  // ls, semi_normal, augmented, combined
Strategy parse_strategy(std::string_view s);
std::string_view status_name(Status s);      // converged, max_iterations, ...
std::string_view solver_name(SolverKind s);  // direct, iterative
SolverKind parse_solver(std::string_view s);

/// Scaling of the (1,1) block of the augmented matrix.
/// Optimal gives 2^{-1/2} sigma_min, which minimizes its condition number.
double scale_alpha(double sigma_min, AlphaMode mode, double given = 1.0);

struct AlphaSetting {
  AlphaMode mode = AlphaMode::Unit;
  double value = 1.0;  // used by Given
};

struct RefinerConfig {
  int max_iters = 30;
  double tau_multiplier = 8.0;
  AlphaSetting alpha;
  SolverKind solver = SolverKind::DirectQR;
  // Unset: 1e-14 / 1e-7 and n iterations for LSQR, 1e-12 / 1e-6 and 50
  // for GMRES, chosen by working precision.
  std::optional<KrylovConfig> lsqr;
  std::optional<KrylovConfig> gmres;
  StopRule stop_rule = StopRule::TrueError;
  bool detect_divergence = false;  // Diverged once x_relerr > 1e6 x iteration 0
  std::optional<std::uint64_t> sketch_seed;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double x_relerr = 0.0;
  double r_relerr = 0.0;
  double dx_norm = 0.0;  // ||dx|| of the update that produced this iterate
  double dr_norm = 0.0;  // augmented and combined only
  int inner_iters = 0;   // Krylov iterations spent on that update
};

struct RefinementTrace {
  std::vector<IterationRecord> iterations;
  Status status = Status::MaxIterations;
  Strategy strategy = Strategy::LeastSquares;
  SolverKind solver = SolverKind::DirectQR;
  PrecisionPair precisions;
  double tau = 0.0;
  std::string message;  // reason for SolverFailure

  const IterationRecord& last() const { return iterations.back(); }
  int refinement_steps() const { return static_cast<int>(iterations.size()) - 1; }
  int total_inner_iters() const;
};

/// Correction solves at working precision W, either from a stored
/// Householder QR of the rounded A or by sketch-preconditioned Krylov
/// iterations.
template <typename W>
class CorrectionSolver {
 public:
  struct Solve {
    Vector<W> v;
    int inner_iters = 0;
  };
  struct AugSolve {
    Vector<W> dr, dx;
    int inner_iters = 0;
  };

  static CorrectionSolver direct(const Matrix<W>& A) {
    CorrectionSolver s;
    s.A_ = &A;
    s.qr_ = qr_factor(A);
    return s;
  }

  static CorrectionSolver iterative(const Matrix<W>& A, std::uint64_t sketch_seed, KrylovConfig lsqr_cfg,
                                    KrylovConfig gmres_cfg) {
    CorrectionSolver s;
    s.A_ = &A;
    s.pre_ = build_sketch_preconditioner(A, sketch_seed);
    s.lsqr_cfg_ = lsqr_cfg;
    s.gmres_cfg_ = gmres_cfg;
    return s;
  }

  bool is_direct() const { return qr_.has_value(); }
  const QrFactors<W>& qr() const { return *qr_; }
  const SketchPreconditioner<W>& preconditioner() const { return *pre_; }

  /// argmin ||rhs - A v||.
  Solve least_squares(std::span<const W> rhs) const {
    if (qr_) return {qr_least_squares(*qr_, rhs), 0};
    auto res = lsqr(*A_, rhs, lsqr_cfg_, &*pre_, LsqrSide::Right);
    return {std::move(res.x), res.iters};
  }

  /// Minimum-norm solution of A^T v = g.
  Solve min_norm(std::span<const W> g) const {
    if (qr_) return {qr_min_norm(*qr_, g), 0};
    auto res = lsqr(*A_, g, lsqr_cfg_, &*pre_, LsqrSide::Left);
    return {std::move(res.x), res.iters};
  }

  /// R^T R v = rhs; direct only.
  Solve semi_normal(std::span<const W> rhs) const {
    if (!qr_) throw ConfigError("semi-normal corrections need the direct QR solver");
    const auto y = tri_solve(qr_->R, rhs, true);
    return {tri_solve(qr_->R, std::span<const W>(y), false), 0};
  }

  /// [[I, A], [A^T, 0]] (dr, dx) = (f, g), solved through the alpha-scaled
  /// matrix.
  AugSolve augmented(std::span<const W> f, std::span<const W> g, W alpha) const {
    if (qr_) {
      auto res = solve_augmented_qr(f, g, *qr_, alpha);
      return {std::move(res.delta_r), std::move(res.delta_x), 0};
    }
    auto res = gmres_augmented(*A_, &*pre_, f, g, alpha, gmres_cfg_);
    return {std::move(res.delta_r), std::move(res.delta_x), res.iters};
  }

  /// The augmented correction assembled from three least-squares solves:
  /// dx = A^+ f + A^+ r, dr = (f - A A^+ f) + min-norm solution of A^T y = g.
  /// The second term of dx stands in for -(A^T A)^{-1} g, which it equals
  /// when g = -A^T r.
  AugSolve combined(std::span<const W> f, std::span<const W> g, std::span<const W> r) const {
    auto dx1 = least_squares(f);
    auto pn = matvec(*A_, std::span<const W>(dx1.v));
    for (std::size_t i = 0; i < pn.size(); ++i) pn[i] = f[i] - pn[i];
    auto dx2 = least_squares(r);
    auto dr1 = min_norm(g);
    AugSolve out;
    out.dx = std::move(dx1.v);
    for (std::size_t j = 0; j < out.dx.size(); ++j) out.dx[j] += dx2.v[j];
    out.dr = std::move(dr1.v);
    for (std::size_t i = 0; i < out.dr.size(); ++i) out.dr[i] += pn[i];
    out.inner_iters = dx1.inner_iters + dx2.inner_iters + dr1.inner_iters;
    return out;
  }

  /// Starting point: R^{-1} Q1^T b for the direct solver, preconditioned
  /// LSQR otherwise.
  Solve initial(std::span<const W> b) const { return least_squares(b); }

 private:
  CorrectionSolver() = default;
  const Matrix<W>* A_ = nullptr;
  std::optional<QrFactors<W>> qr_;
  std::optional<SketchPreconditioner<W>> pre_;
  KrylovConfig lsqr_cfg_, gmres_cfg_;
};

/// One refinement run, advanced step by step. Obtained from make_session;
/// run_driver is the usual entry point.
class RefinementSession {
 public:
  virtual ~RefinementSession() = default;
  /// Errors of the current iterate; dx/dr/inner fields describe the last step.
  virtual IterationRecord measure() const = 0;
  /// Compute a correction and apply it. Throws lsir::Error on solver failure.
  virtual void step() = 0;
  /// ||dx|| / ||x|| of the last step.
  virtual double relative_update() const = 0;
  virtual Vector<double> solution() const = 0;
  virtual double tau() const = 0;
};

/// Validates the (strategy, solver, precision) combination and builds the
/// working-precision data, the factorization or preconditioner, and x0.
/// `x0` overrides the solver's starting point (rounded to working precision).
std::unique_ptr<RefinementSession> make_session(const LsProblem& problem, Strategy strategy,
                                                const RefinerConfig& cfg, PrecisionPair p,
                                                std::optional<std::span<const double>> x0 = std::nullopt);

/// Runs the strategy until the stop rule holds or max_iters steps were taken.
/// Iteration 0 is checked before any refinement. Configuration errors throw;
/// failures inside the run end it with status SolverFailure.
RefinementTrace run_driver(const LsProblem& problem, Strategy strategy, const RefinerConfig& cfg, PrecisionPair p,
                           std::optional<std::span<const double>> x0 = std::nullopt);

/// Same loop over an existing session.
RefinementTrace drive(RefinementSession& session, Strategy strategy, const RefinerConfig& cfg, PrecisionPair p);

}  // namespace lsir
