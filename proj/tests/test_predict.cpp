#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "dense_oracle.hpp"
#include "lsir/densela.hpp"
#include "lsir/predict.hpp"

using namespace lsir;

namespace {
constexpr double kU32 = 6e-8;
constexpr double kU64 = 1.1e-16;
}  // namespace

TEST_CASE("ls_recognition") {
  CHECK(ls_recognition(10, 1e-3));
  CHECK_FALSE(ls_recognition(1e2, 1));
  CHECK(ls_recognition(1e8, 0));
}

TEST_CASE("sn_recognition") {
  CHECK(sn_recognition(1e3, 1, 1, kU32));
  CHECK_FALSE(sn_recognition(1e5, 1, 1, kU32));
  CHECK(sn_recognition(1e8, 0, 1, kU32));
}

TEST_CASE("sn_convergence") {
  CHECK(sn_convergence(1e3, kU32));
  CHECK(sn_convergence(4.0e3, kU32));
  CHECK_FALSE(sn_convergence(4.1e3, kU32));
  CHECK_FALSE(sn_convergence(1e4, kU32));
  CHECK(sn_convergence(1e7, kU64));
  CHECK(sn_convergence(9.4e7, kU64));
  CHECK_FALSE(sn_convergence(9.6e7, kU64));
}

TEST_CASE("sn_limiting") {
  CHECK(sn_limiting(1e3, 1, kU32, kU64));
  CHECK_FALSE(sn_limiting(1e6, 1, kU32, kU64));
  CHECK(sn_limiting(1, 0, kU32, kU64));
  CHECK(sn_limiting(1, 0, kU64, 9.6e-35));
}

TEST_CASE("csne_one_step") {
  CHECK(csne_one_step(1e5, 0, kU64));
  CHECK_FALSE(csne_one_step(1e6, 0, kU64));
  // With rho = O(1) the condition is kappa < u^{-1/3} up to the factor (2 + rho).
  const double k = std::cbrt(1.0 / (3.0 * kU64));
  CHECK(csne_one_step(0.99 * k, 1, kU64));
  CHECK_FALSE(csne_one_step(1.01 * k, 1, kU64));
}

TEST_CASE("aug_x and aug_r") {
  CHECK(aug_x_convergence(1e6, 1e-7, kU32));
  CHECK_FALSE(aug_x_convergence(1e8, 1, kU32));
  CHECK(aug_x_convergence(1e8, 0, kU32));
  CHECK(aug_r_convergence(1e8, 1, kU32));
  CHECK(aug_r_convergence(1e8, 1e-7, kU32));
  CHECK_FALSE(aug_r_convergence(1e8, 1e-10, kU32));
}

TEST_CASE("kappa_augmented formula") {
  CHECK(kappa_augmented(1, 1, 1) == doctest::Approx(std::numbers::phi * std::numbers::phi).epsilon(1e-12));
  CHECK(kappa_augmented(1, 1, std::numbers::sqrt2 / 2) == doctest::Approx(2.0).epsilon(1e-12));
  const double r = kappa_augmented(1, 1e-4, 1) / kappa_augmented(1, 1e-3, 1);
  CHECK(r == doctest::Approx(100).epsilon(0.01));
  CHECK_THROWS_AS(kappa_augmented(1, 0, 1), ConfigError);
}

TEST_CASE("optimal alpha bounds the augmented condition number by 2 kappa") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const double smax = std::pow(10.0, 4 * rng.uniform() - 2);
    const double smin = smax * std::pow(10.0, -8 * rng.uniform());
    const double kappa = smax / smin;
    const double ka = kappa_augmented(smax, smin, scale_alpha(smin, AlphaMode::Optimal));
    CHECK(ka >= kappa * (1 - 1e-12));
    CHECK(ka <= 2 * kappa * (1 + 1e-12));
  }
}

TEST_CASE("kappa_augmented matches the assembled matrix") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const double kappa = std::pow(10.0, static_cast<double>(seed % 4));
    const auto A = gen_randsvd(30, 4, kappa, seed);
    const auto sv = svd_of_r(qr_factor(A).R);
    for (double alpha : {1.0, scale_alpha(sv.back(), AlphaMode::Optimal), 0.1}) {
      const double formula = kappa_augmented(sv.front(), sv.back(), alpha);
      CHECK(oracle::augmented_condition(A, alpha) == doctest::Approx(formula).epsilon(0.01));
    }
  }
}

TEST_CASE("cost model rows") {
  const auto ls = cost_model(1000, 10, Strategy::LeastSquares);
  CHECK(ls.flops_residual_precision == 20000);
  CHECK(ls.flops_working_precision == 40100);
  CHECK(ls.needs_Az);
  CHECK_FALSE(ls.needs_ATz);
  const auto sn = cost_model(1000, 10, Strategy::SemiNormal);
  CHECK(sn.flops_residual_precision == 39990);
  CHECK(sn.flops_working_precision == 210);
  const auto aug = cost_model(1000, 10, Strategy::Augmented);
  CHECK(aug.flops_residual_precision == 40990);
  CHECK(aug.flops_working_precision == 80200);
  CHECK(aug.needs_ATz);
  CHECK_THROWS_AS(cost_model(1000, 10, Strategy::Combined), ConfigError);
}

TEST_CASE("predicates are monotone") {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    const double k1 = std::pow(10.0, 9 * rng.uniform()), k2 = k1 * std::pow(10.0, 2 * rng.uniform());
    const double r1 = std::pow(10.0, -10 * rng.uniform()), r2 = r1 * std::pow(10.0, 2 * rng.uniform());
    const double u = rng.uniform() < 0.5 ? kU32 : kU64;
    const double ur = u == kU32 ? kU64 : 9.6e-35;
    // false stays false as kappa or rho grow
    if (!ls_recognition(k1, r1)) CHECK_FALSE(ls_recognition(k2, r2));
    if (!sn_recognition(k1, r1, 1, u)) CHECK_FALSE(sn_recognition(k2, r2, 1, u));
    if (!sn_convergence(k1, u)) CHECK_FALSE(sn_convergence(k2, u));
    if (!sn_limiting(k1, r1, u, ur)) CHECK_FALSE(sn_limiting(k2, r2, u, ur));
    if (!csne_one_step(k1, r1, u)) CHECK_FALSE(csne_one_step(k2, r2, u));
    if (!aug_x_convergence(k1, r1, u)) CHECK_FALSE(aug_x_convergence(k2, r2, u));
    // aug_r improves as rho grows
    if (aug_r_convergence(k1, r1, u)) CHECK(aug_r_convergence(k2, r2, u));
  }
}

TEST_CASE("csne is stricter than sn_limiting with u_r = u^2") {
  Rng rng(5);
  for (int t = 0; t < 2000; ++t) {
    const double kappa = 2 * std::pow(10.0, 9 * rng.uniform());
    const double rho = std::pow(10.0, -8 * rng.uniform());
    for (double u : {kU32, kU64})
      if (!sn_limiting(kappa, rho, u, u * u)) CHECK_FALSE(csne_one_step(kappa, rho, u));
  }
}

TEST_CASE("condition report") {
  const PrecisionPair p{Format::binary32, Format::binary64};
  const auto rep = condition_report(1e3, 1.0, 1e-3, 2.0, p);
  CHECK(rep.rho == doctest::Approx(5e-4));
  CHECK(rep.u == 0x1p-24);
  for (auto name : kConditionNames) CHECK(rep.at(name).name == name);
  CHECK(rep.at("sn_convergence").holds);
  CHECK_THROWS_AS(rep.at("bogus"), ConfigError);
  CHECK_THROWS_AS(condition_report(0.5, 1.0, 1.0, 1.0, p), ConfigError);

  const auto prob = make_problem(200, 6, 1e4, 1e-2, 3);
  const auto r2 = condition_report(prob, p);
  CHECK(r2.kappa == doctest::Approx(1e4).epsilon(1e-8));
  CHECK(r2.anorm == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r2.rnorm == doctest::Approx(1e-2).epsilon(0.05));
}

TEST_CASE("at least one augmented condition holds on the grid") {
  // Logged rather than asserted: the residual condition uses a simplified
  // constant.
  int counter = 0, cells = 0;
  for (auto pair : {PrecisionPair{Format::binary32, Format::binary64}, PrecisionPair{Format::binary64, Format::dword}})
    for (int ki = 1; ki <= 8; ++ki)
      for (int ri = 0; ri <= 7; ++ri) {
        const auto rep = condition_report(std::pow(10.0, ki), 1.0, std::pow(10.0, -ri), 1.0, pair);
        ++cells;
        if (!rep.at("aug_x").holds && !rep.at("aug_r").holds) {
          ++counter;
          MESSAGE("neither augmented condition holds at kappa=1e", ki, " rnorm=1e-", ri, " ", pair.label());
        }
      }
  CHECK(cells == 128);
  MESSAGE(counter, " cells without a predicted augmented convergence");
}
