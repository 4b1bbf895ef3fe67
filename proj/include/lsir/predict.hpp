#pragma once

// Closed-form convergence conditions and per-iteration cost counts, used to
// overlay predicted regions on observed refinement outcomes. Dimensional
// constants are taken as 1 throughout.

#include <array>
#include <cstdint>
#include <string_view>

#include "lsir/matrix.hpp"
#include "lsir/precision.hpp"
#include "lsir/probgen.hpp"
#include "lsir/refine.hpp"

namespace lsir {

/// LS approach recognizes the solution: kappa^2 rho < 1, rho = ||r*|| / (||A|| ||x*||).
bool ls_recognition(double kappa, double rho);
/// Semi-normal recognition with u_r = u^2: kappa^2 ||r*|| / ||x*|| < 1/u.
bool sn_recognition(double kappa, double rnorm, double xnorm, double u);
/// Semi-normal error decreases every iteration: kappa < u^{-1/2}.
bool sn_convergence(double kappa, double u);
/// Semi-normal limiting accuracy is O(u): u_r kappa^2 (2 + rho) < u.
bool sn_limiting(double kappa, double rho, double u, double u_r);
/// Corrected semi-normal equations done after one step: u kappa^3 (2 + rho) < 1.
bool csne_one_step(double kappa, double rho, double u);
/// Augmented approach converges in x: kappa^2 rho <= 1/u.
bool aug_x_convergence(double kappa, double rho, double u);
/// Augmented approach converges in r: 1/rho <= 1/u; false for rho = 0.
bool aug_r_convergence(double kappa, double rho, double u);

/// Condition number of [[alpha I, A], [A^T, 0]] from the extreme singular
/// values of A.
double kappa_augmented(double sigma_max, double sigma_min, double alpha);

struct CostModel {
  std::int64_t flops_residual_precision = 0;
  std::int64_t flops_working_precision = 0;
  bool needs_Az = false;
  bool needs_ATz = false;
};

/// Flops per refinement iteration; the combined strategy has no entry.
CostModel cost_model(std::int64_t m, std::int64_t n, Strategy s);

struct ConditionEntry {
  std::string_view name;
  double lhs = 0.0;
  double threshold = 0.0;
  bool holds = false;
};

inline constexpr std::array<std::string_view, 7> kConditionNames = {
    "ls_recognition", "sn_recognition", "sn_convergence", "sn_limiting",
    "csne_one_step",  "aug_x",          "aug_r"};

struct ConditionReport {
  double kappa = 1.0;
  double rho = 0.0;
  double rnorm = 0.0;
  double xnorm = 1.0;
  double anorm = 1.0;
  double u = 0.0;
  double u_r = 0.0;
  std::array<ConditionEntry, 7> entries{};

  const ConditionEntry& at(std::string_view name) const;
};

/// Every condition evaluated from raw quantities.
ConditionReport condition_report(double kappa, double anorm, double rnorm, double xnorm, PrecisionPair p);

/// Same, with kappa and ||A|| from the singular values of A (double-word Householder
/// R followed by Jacobi SVD) and ||r*||, ||x*|| from the reference solution.
ConditionReport condition_report(const LsProblem& problem, PrecisionPair p);

}  // namespace lsir
