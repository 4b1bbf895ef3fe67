#include "lsir/predict.hpp"

#include <cmath>
#include <limits>

#include "lsir/densela.hpp"

namespace lsir {

namespace {

void check_args(double kappa, double rho) {
  if (!(kappa >= 1.0)) throw ConfigError("condition predicates need kappa >= 1");
  if (!(rho >= 0.0)) throw ConfigError("condition predicates need rho >= 0");
}

}  // namespace

bool ls_recognition(double kappa, double rho) {
  check_args(kappa, rho);
  return kappa * kappa * rho < 1.0;
}

bool sn_recognition(double kappa, double rnorm, double xnorm, double u) {
  check_args(kappa, rnorm);
  if (rnorm == 0.0) return true;
  return kappa * kappa * rnorm / xnorm < 1.0 / u;
}

bool sn_convergence(double kappa, double u) {
  check_args(kappa, 0.0);
  return kappa < 1.0 / std::sqrt(u);
}

bool sn_limiting(double kappa, double rho, double u, double u_r) {
  check_args(kappa, rho);
  return u_r * kappa * kappa * (2.0 + rho) < u;
}

bool csne_one_step(double kappa, double rho, double u) {
  check_args(kappa, rho);
  return u * kappa * kappa * kappa * (2.0 + rho) < 1.0;
}

bool aug_x_convergence(double kappa, double rho, double u) {
  check_args(kappa, rho);
  return kappa * kappa * rho <= 1.0 / u;
}

bool aug_r_convergence(double kappa, double rho, double u) {
  check_args(kappa, rho);
  if (rho == 0.0) return false;
  return 1.0 / rho <= 1.0 / u;
}

double kappa_augmented(double sigma_max, double sigma_min, double alpha) {
  if (!(sigma_max > 0.0 && sigma_min > 0.0 && alpha > 0.0))
    throw ConfigError("kappa_augmented: arguments must be positive");
  const double num = alpha + std::sqrt(alpha * alpha + 4.0 * sigma_max * sigma_max);
  const double den = std::min(2.0 * alpha, std::sqrt(alpha * alpha + 4.0 * sigma_min * sigma_min) - alpha);
  return num / den;
}

CostModel cost_model(std::int64_t m, std::int64_t n, Strategy s) {
  switch (s) {
    case Strategy::LeastSquares: return {2 * m * n, 4 * m * n + n * n, true, false};
    case Strategy::SemiNormal: return {4 * m * n - n, 2 * n * n + n, true, true};
    case Strategy::Augmented: return {4 * m * n + m - n, 8 * m * n + 2 * n * n, true, true};
    case Strategy::Combined: break;
  }
  throw ConfigError("cost_model: no cost row for the combined strategy");
}

const ConditionEntry& ConditionReport::at(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw ConfigError("unknown condition '" + std::string(name) + "'");
}

ConditionReport condition_report(double kappa, double anorm, double rnorm, double xnorm, PrecisionPair p) {
  ConditionReport c;
  c.kappa = kappa;
  c.anorm = anorm;
  c.rnorm = rnorm;
  c.xnorm = xnorm;
  c.rho = rnorm / (anorm * xnorm);
  c.u = p.u();
  c.u_r = p.u_r();
  const double k2 = kappa * kappa;
  const double inf = std::numeric_limits<double>::infinity();
  c.entries = {{
      {kConditionNames[0], k2 * c.rho, 1.0, ls_recognition(kappa, c.rho)},
      {kConditionNames[1], k2 * rnorm / xnorm, 1.0 / c.u, sn_recognition(kappa, rnorm, xnorm, c.u)},
      {kConditionNames[2], kappa, 1.0 / std::sqrt(c.u), sn_convergence(kappa, c.u)},
      {kConditionNames[3], c.u_r * k2 * (2.0 + c.rho), c.u, sn_limiting(kappa, c.rho, c.u, c.u_r)},
      {kConditionNames[4], c.u * k2 * kappa * (2.0 + c.rho), 1.0, csne_one_step(kappa, c.rho, c.u)},
      {kConditionNames[5], k2 * c.rho, 1.0 / c.u, aug_x_convergence(kappa, c.rho, c.u)},
      {kConditionNames[6], c.rho > 0.0 ? 1.0 / c.rho : inf, 1.0 / c.u, aug_r_convergence(kappa, c.rho, c.u)},
  }};
  return c;
}

ConditionReport condition_report(const LsProblem& problem, PrecisionPair p) {
  const auto sv = svd_of_r(qr_factor(cast_matrix<dword>(problem.A)).R);
  const double smax = as_double(sv.front());
  const double smin = as_double(sv.back());
  return condition_report(smax / smin, smax, as_double(norm2(problem.r_star)), as_double(norm2(problem.x_star)), p);
}

}  // namespace lsir
