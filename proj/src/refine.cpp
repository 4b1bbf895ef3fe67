#include "lsir/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lsir {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::LeastSquares: return "ls";
    case Strategy::SemiNormal: return "semi_normal";
    case Strategy::Augmented: return "augmented";
    case Strategy::Combined: return "combined";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "ls" || s == "least_squares") return Strategy::LeastSquares;
  if (s == "semi_normal" || s == "sn" || s == "semi-normal") return Strategy::SemiNormal;
  if (s == "augmented" || s == "aug") return Strategy::Augmented;
  if (s == "combined") return Strategy::Combined;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

std::string_view status_name(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIterations: return "max_iterations";
    case Status::Diverged: return "diverged";
    case Status::SolverFailure: return "solver_failure";
  }
  return "unknown";
}

std::string_view solver_name(SolverKind s) { return s == SolverKind::DirectQR ? "direct" : "iterative"; }

SolverKind parse_solver(std::string_view s) {
  if (s == "direct" || s == "qr") return SolverKind::DirectQR;
  if (s == "iterative" || s == "krylov") return SolverKind::Krylov;
  throw ConfigError("unknown solver '" + std::string(s) + "'");
}

double scale_alpha(double sigma_min, AlphaMode mode, double given) {
  switch (mode) {
    case AlphaMode::Unit: return 1.0;
    case AlphaMode::Optimal:
      if (!(sigma_min > 0.0)) throw ConfigError("scale_alpha: sigma_min must be positive");
      return sigma_min / std::numbers::sqrt2;
    case AlphaMode::Given:
      if (!(given > 0.0)) throw ConfigError("scale_alpha: alpha must be positive");
      return given;
  }
  throw ConfigError("scale_alpha: unknown mode");
}

void RefinerConfig::validate() const {
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(tau_multiplier > 0.0)) throw ConfigError("tau_multiplier must be positive");
  if (alpha.mode == AlphaMode::Given && !(alpha.value > 0.0)) throw ConfigError("alpha must be positive");
  if (lsqr) lsqr->validate();
  if (gmres) gmres->validate();
}

int RefinementTrace::total_inner_iters() const {
  int s = 0;
  for (const auto& it : iterations) s += it.inner_iters;
  return s;
}

namespace {

template <typename T>
bool all_finite(const Vector<T>& v) {
  return std::all_of(v.begin(), v.end(), [](const T& e) {
    using std::isfinite;
    return isfinite(e);
  });
}

template <typename W, typename R>
class Session final : public RefinementSession {
 public:
  Session(const LsProblem& p, Strategy strategy, const RefinerConfig& cfg,
          std::optional<std::span<const double>> x0)
      : prob_(p),
        strategy_(strategy),
        A_r_(cast_matrix<R>(p.A)),
        b_r_(cast_vector<R>(std::span<const dword>(p.b))),
        A_w_(cast_matrix<W>(p.A)),
        b_w_(cast_vector<W>(std::span<const dword>(p.b))),
        solver_(make_solver(p, cfg)),
        tau_(cfg.tau_multiplier * unit_roundoff_v<W>) {
    xstar_norm_ = as_double(norm2(p.x_star));
    const double rs = as_double(norm2(p.r_star));
    r_scale_ = rs > 0.0 ? rs : as_double(norm2(p.b));
    if (r_scale_ == 0.0) r_scale_ = 1.0;

    if (x0) {
      require_dims(x0->size() == p.n(), "x0 length mismatch");
      x_ = cast_vector<W>(*x0);
    } else {
      auto s = solver_.initial(std::span<const W>(b_w_));
      x_ = std::move(s.v);
    }
    if (strategy_ == Strategy::Augmented || strategy_ == Strategy::Combined) {
      // r0 = b - A x0 at working precision.
      r_ = residual_matvec(A_w_, std::span<const W>(x_), std::span<const W>(b_w_));
    }
    if (strategy_ == Strategy::Augmented) {
      double smin = 1.0;
      if (cfg.alpha.mode == AlphaMode::Optimal) {
        const auto sv = svd_of_r(qr_factor(p.A).R);
        smin = sv.back();
      }
      alpha_ = to<W>(scale_alpha(smin, cfg.alpha.mode, cfg.alpha.value));
    }
  }

  IterationRecord measure() const override {
    IterationRecord rec = last_;
    rec.x_relerr = diff_norm(x_, prob_.x_star) / (xstar_norm_ > 0.0 ? xstar_norm_ : 1.0);
    if (strategy_ == Strategy::Augmented || strategy_ == Strategy::Combined) {
      rec.r_relerr = diff_norm(r_, prob_.r_star) / r_scale_;
    } else {
      const auto r = residual_matvec(A_r_, std::span<const W>(x_), std::span<const R>(b_r_));
      rec.r_relerr = diff_norm(r, prob_.r_star) / r_scale_;
    }
    return rec;
  }

  void step() override {
    last_ = IterationRecord{};
    last_.iter = iter_ + 1;
    Vector<W> dx, dr;
    switch (strategy_) {
      case Strategy::LeastSquares: {
        const auto r = residual_matvec(A_r_, std::span<const W>(x_), std::span<const R>(b_r_));
        const auto rw = cast_vector<W>(r);
        auto s = solver_.least_squares(std::span<const W>(rw));
        dx = std::move(s.v);
        last_.inner_iters = s.inner_iters;
        break;
      }
      case Strategy::SemiNormal: {
        const auto r = residual_matvec(A_r_, std::span<const W>(x_), std::span<const R>(b_r_));
        const auto t = residual_matvec_t(A_r_, std::span<const R>(r));
        const auto tw = cast_vector<W>(t);
        dx = solver_.semi_normal(std::span<const W>(tw)).v;
        break;
      }
      case Strategy::Augmented:
      case Strategy::Combined: {
        // f = b - r - A x and g = -A^T r at residual precision.
        Vector<R> s(b_r_.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = b_r_[i] - to<R>(r_[i]);
        const auto f = residual_matvec(A_r_, std::span<const W>(x_), std::span<const R>(s));
        auto g = residual_matvec_t(A_r_, std::span<const W>(r_));
        for (auto& e : g) e = -e;
        const auto fw = cast_vector<W>(f);
        const auto gw = cast_vector<W>(g);
        auto res = strategy_ == Strategy::Augmented
                       ? solver_.augmented(std::span<const W>(fw), std::span<const W>(gw), alpha_)
                       : solver_.combined(std::span<const W>(fw), std::span<const W>(gw), std::span<const W>(r_));
        dx = std::move(res.dx);
        dr = std::move(res.dr);
        last_.inner_iters = res.inner_iters;
        break;
      }
    }
    if (!all_finite(dx) || !all_finite(dr)) throw NumericalFailure("correction is not finite");
    for (std::size_t j = 0; j < x_.size(); ++j) x_[j] += dx[j];
    for (std::size_t i = 0; i < dr.size(); ++i) r_[i] += dr[i];
    last_.dx_norm = as_double(norm2(dx));
    last_.dr_norm = dr.empty() ? 0.0 : as_double(norm2(dr));
    const double xn = as_double(norm2(x_));
    rel_update_ = last_.dx_norm / (xn > 0.0 ? xn : 1.0);
    ++iter_;
  }

  double relative_update() const override { return rel_update_; }
  Vector<double> solution() const override { return cast_vector<double>(x_); }
  double tau() const override { return tau_; }

 private:
  CorrectionSolver<W> make_solver(const LsProblem& p, const RefinerConfig& cfg) const {
    if (cfg.solver == SolverKind::DirectQR) return CorrectionSolver<W>::direct(A_w_);
    const double u = unit_roundoff_v<W>;
    const auto lc = cfg.lsqr.value_or(default_lsqr_config(u, p.n()));
    const auto gc = cfg.gmres.value_or(default_gmres_config(u));
    const auto seed = cfg.sketch_seed.value_or(derive_seed(p.seed, 0x534B));
    return CorrectionSolver<W>::iterative(A_w_, seed, lc, gc);
  }

  const LsProblem& prob_;
  Strategy strategy_;
  Matrix<R> A_r_;
  Vector<R> b_r_;
  Matrix<W> A_w_;
  Vector<W> b_w_;
  CorrectionSolver<W> solver_;
  double tau_;
  double xstar_norm_ = 1.0;
  double r_scale_ = 1.0;
  W alpha_ = W(1);
  Vector<W> x_, r_;
  IterationRecord last_{};
  int iter_ = 0;
  double rel_update_ = std::numeric_limits<double>::infinity();
};

template <typename R>
bool rhs_representable(const LsProblem& p) {
  for (const auto& v : p.b)
    if (!(dword(to<R>(v)) == v)) return false;
  return true;
}

template <typename W, typename R>
std::unique_ptr<RefinementSession> build(const LsProblem& p, Strategy s, const RefinerConfig& cfg,
                                         std::optional<std::span<const double>> x0) {
  if (!rhs_representable<R>(p))
    throw ConfigError("right-hand side is not representable in the residual precision");
  return std::make_unique<Session<W, R>>(p, s, cfg, x0);
}

}  // namespace

std::unique_ptr<RefinementSession> make_session(const LsProblem& problem, Strategy strategy,
                                                const RefinerConfig& cfg, PrecisionPair p,
                                                std::optional<std::span<const double>> x0) {
  cfg.validate();
  if (!p.valid()) throw ConfigError("invalid precision pair " + p.label());
  if (strategy == Strategy::Combined) {
    // only u_r <= u is needed here
  } else if (!p.squared_residual()) {
    throw ConfigError(std::string(strategy_name(strategy)) + " needs u_r <= u^2, got " + p.label());
  }
  if (strategy == Strategy::SemiNormal && cfg.solver == SolverKind::Krylov)
    throw ConfigError("semi_normal has no iterative variant");
  if (problem.m() < problem.n() || problem.n() == 0) throw ConfigError("problem must have m >= n >= 1");

  using F = Format;
  if (p.working == F::binary32 && p.residual == F::binary32) return build<float, float>(problem, strategy, cfg, x0);
  if (p.working == F::binary32 && p.residual == F::binary64) return build<float, double>(problem, strategy, cfg, x0);
  if (p.working == F::binary32 && p.residual == F::dword) return build<float, dword>(problem, strategy, cfg, x0);
  if (p.working == F::binary64 && p.residual == F::binary64) return build<double, double>(problem, strategy, cfg, x0);
  if (p.working == F::binary64 && p.residual == F::dword) return build<double, dword>(problem, strategy, cfg, x0);
  throw ConfigError("unsupported precision pair " + p.label());
}

RefinementTrace drive(RefinementSession& session, Strategy strategy, const RefinerConfig& cfg, PrecisionPair p) {
  RefinementTrace t;
  t.strategy = strategy;
  t.solver = cfg.solver;
  t.precisions = p;
  t.tau = session.tau();
  double first = 0.0;
  for (int i = 0;; ++i) {
    auto rec = session.measure();
    rec.iter = i;
    t.iterations.push_back(rec);
    if (i == 0) first = rec.x_relerr;
    if (!std::isfinite(rec.x_relerr)) {
      t.status = Status::Diverged;
      return t;
    }
    const bool done = cfg.stop_rule == StopRule::TrueError ? rec.x_relerr <= t.tau
                                                           : (i > 0 && session.relative_update() <= t.tau);
    if (done) {
      t.status = Status::Converged;
      return t;
    }
    if (cfg.detect_divergence && i > 0 && rec.x_relerr > 1e6 * first) {
      t.status = Status::Diverged;
      return t;
    }
    if (i == cfg.max_iters) {
      t.status = Status::MaxIterations;
      return t;
    }
    try {
      session.step();
    } catch (const Error& e) {
      t.status = Status::SolverFailure;
      t.message = e.what();
      return t;
    }
  }
}

RefinementTrace run_driver(const LsProblem& problem, Strategy strategy, const RefinerConfig& cfg, PrecisionPair p,
                           std::optional<std::span<const double>> x0) {
  std::unique_ptr<RefinementSession> s;
  try {
    s = make_session(problem, strategy, cfg, p, x0);
  } catch (const ConfigError&) {
    throw;
  } catch (const DimensionMismatch&) {
    throw;
  } catch (const Error& e) {
    // factorization or preconditioner failure
    RefinementTrace t;
    t.strategy = strategy;
    t.solver = cfg.solver;
    t.precisions = p;
    t.tau = cfg.tau_multiplier * p.u();
    t.status = Status::SolverFailure;
    t.message = e.what();
    return t;
  }
  return drive(*s, strategy, cfg, p);
}

}  // namespace lsir
