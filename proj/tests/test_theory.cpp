#include <doctest.h>

#include <cmath>

#include "gxpo/rng.hpp"
#include "gxpo/testbed.hpp"
#include "gxpo/theory.hpp"

using namespace gxpo;

namespace {

Vec random_vec(Rng& rng, std::size_t d) {
  Vec v(d);
  for (auto& x : v) x = rng.normal();
  return v;
}

Vec floor_theta(const QuadraticObjective& q, Rng& rng, double floor) {
  for (;;) {
    const Vec theta = random_vec(rng, q.dimension());
    const Vec g = q.gradient(theta);
    bool ok = true;
    for (double x : g) {
      if (std::abs(x) < floor) { ok = false; break; }
    }
    if (ok) return theta;
  }
}

}  // namespace

TEST_SUITE("theory") {

TEST_CASE("ratio bias vanishes on diagonal quadratics") {
  const QuadraticObjective q = make_random_quadratic(8, 0.1, 1.0, true, 5);
  Rng rng(1);
  const Vec theta0 = floor_theta(q, rng, 1e-3);
  const Vec residual = ratio_bias_check(q, theta0, 0.01);
  for (double r : residual) CHECK(std::abs(r) <= 1e-14);
  // on a diagonal quadratic the empirical ratio IS the diagonal rate
  const Vec g0 = q.gradient(theta0);
  Vec theta1(8);
  for (int i = 0; i < 8; ++i) theta1[i] = theta0[i] - 0.01 * g0[i];
  const Vec g1 = q.gradient(theta1);
  for (int i = 0; i < 8; ++i) {
    const double rbar = 1.0 - 0.01 * q.hessian_matrix()(i, i);
    CHECK(g1[i] / g0[i] == doctest::Approx(rbar).epsilon(1e-12));
  }
}

TEST_CASE("ratio bias worked 2x2 example") {
  Matrix h(2, 2);
  h << 2.0, 0.5, 0.5, 1.0;
  const QuadraticObjective q(h);
  // theta0 with g0 = (1, 1): solve H theta0 = (1,1)
  const Eigen::Vector2d rhs(1.0, 1.0);
  const Eigen::Vector2d sol = h.colPivHouseholderQr().solve(rhs);
  const Vec theta0 = {sol[0], sol[1]};
  const Vec g0 = q.gradient(theta0);
  REQUIRE(g0[0] == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(g0[1] == doctest::Approx(1.0).epsilon(1e-12));

  const double eta = 0.01;
  Vec theta1 = {theta0[0] - eta * g0[0], theta0[1] - eta * g0[1]};
  const Vec g1 = q.gradient(theta1);
  const double r1 = g1[0] / g0[0];
  CHECK(r1 == doctest::Approx(0.975).epsilon(1e-10));
  const double rbar1 = 1.0 - eta * 2.0;
  CHECK(rbar1 == doctest::Approx(0.98));
  CHECK(r1 - rbar1 == doctest::Approx(-0.005).epsilon(1e-8));  // -eta H12 g02/g01

  const Vec residual = ratio_bias_check(q, theta0, eta);
  CHECK(std::abs(residual[0]) <= 1e-12);
  CHECK(std::abs(residual[1]) <= 1e-12);
}

TEST_CASE("ratio bias is zero with a zero step size") {
  const QuadraticObjective q = make_random_quadratic(6, 0.1, 1.0, false, 19);
  Rng rng(2);
  const Vec theta0 = floor_theta(q, rng, 1e-3);
  const Vec residual = ratio_bias_check(q, theta0, 0.0);
  for (double r : residual) CHECK(r == 0.0);
}

TEST_CASE("ratio bias rejects zero gradient coordinates") {
  Matrix h(2, 2);
  h << 1.0, 0.0, 0.0, 1.0;
  const QuadraticObjective q(h);
  CHECK_THROWS_AS(ratio_bias_check(q, {1.0, 0.0}, 0.01), std::invalid_argument);
}

TEST_CASE("ratio bias residuals stay below 1e-10 across random instances") {
  for (int inst = 0; inst < 100; ++inst) {
    Rng rng(200 + static_cast<std::uint64_t>(inst));
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform_int(63));
    const QuadraticObjective q =
        make_random_quadratic(d, 0.1, 1.0, false, 900 + static_cast<std::uint64_t>(inst));
    const double eta = std::pow(10.0, rng.uniform(-4.0, -2.0));
    const Vec theta0 = floor_theta(q, rng, 1e-3);
    const Vec residual = ratio_bias_check(q, theta0, eta);
    CHECK(norm_inf(residual) <= 1e-10);
  }
}

TEST_CASE("displacement surrogate is exact on diagonal quadratics") {
  const QuadraticObjective q = make_random_quadratic(12, 0.1, 1.0, true, 33);
  Rng rng(6);
  const Vec theta0 = floor_theta(q, rng, 1e-3);
  const BoundReport rep = displacement_error(q, theta0, 0.2, 4, 1e-4);
  CHECK(rep.measured_error <= 1e-10);
  CHECK(rep.e_off == 0.0);       // no off-diagonal coupling
  CHECK(rep.e_nonquad == 0.0);   // M3 = 0
  CHECK(rep.satisfied);
}

TEST_CASE("pure quadratic: no Taylor term, measured error under the bound") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(300 + static_cast<std::uint64_t>(inst));
    const QuadraticObjective q =
        make_random_quadratic(16, 0.1, 1.0, false, 1200 + static_cast<std::uint64_t>(inst));
    const Vec theta0 = floor_theta(q, rng, 1e-3);
    const Vec g0 = q.gradient(theta0);
    double min_abs = 1e9;
    for (double x : g0) min_abs = std::min(min_abs, std::abs(x));
    const BoundReport rep = displacement_error(q, theta0, 1e-3, 3, 0.5 * min_abs);
    CHECK(rep.e_nonquad == 0.0);
    CHECK(rep.measured_error <= rep.e_off + rep.e_ratio);
    CHECK(rep.satisfied);
  }
}

TEST_CASE("error split: |emp - diag| is covered by E_ratio alone") {
  Rng rng(17);
  const QuadraticObjective q = make_random_quadratic(16, 0.1, 1.0, false, 87);
  const Vec theta0 = floor_theta(q, rng, 1e-3);
  const double eta = 1e-3;
  const int k = 3;
  const Vec g0 = q.gradient(theta0);
  double min_abs = 1e9;
  for (double x : g0) min_abs = std::min(min_abs, std::abs(x));
  const double delta = 0.5 * min_abs;

  const SurrogatePaths paths = run_displacement_surrogate(q, theta0, eta, k, delta);
  const BoundReport rep = displacement_error(q, theta0, eta, k, delta);
  const double emp_vs_diag = norm2(sub(paths.theta_k_emp, paths.theta_k_diag));
  CHECK(emp_vs_diag <= rep.e_ratio);
}

TEST_CASE("worked bound constants at K=3, eta=1e-7") {
  // C_{3,R} = 1 + 2R and D_{3,R} = 3 + R + R^2; coefficient of E_off is
  // 3e-14 and of E_nonquad 2.5e-21 at this eta.
  Rng rng(8);
  QuadraticObjective base = make_random_quadratic(10, 0.1, 1.0, false, 44);
  const Matrix h = base.hessian_matrix();
  const CubicPerturbedObjective f(std::move(base), 5e-4);
  const Vec theta0 = random_vec(rng, 10);
  const double eta = 1e-7;
  const BoundReport rep = displacement_error(f, theta0, eta, 3, 1e-8);

  const double r = rep.ratio_bound;
  CHECK(rep.c_kr == doctest::Approx(1.0 + 2.0 * r).epsilon(1e-12));
  CHECK(rep.d_kr == doctest::Approx(3.0 + r + r * r).epsilon(1e-12));

  Matrix h_off = f.hessian(theta0);
  for (Eigen::Index i = 0; i < h_off.rows(); ++i) h_off(i, i) = 0.0;
  const double expected_off = 3e-14 * spectral_norm_sym(h_off) *
                              norm2(f.gradient(theta0)) * rep.rho_max;
  CHECK(rep.e_off == doctest::Approx(expected_off).epsilon(1e-9));

  const double expected_nonquad = 2.5e-21 * rep.m3 * rep.grad_bound *
                                  rep.grad_bound * rep.rho_max * rep.rho_max;
  CHECK(rep.e_nonquad == doctest::Approx(expected_nonquad).epsilon(1e-9));
}

TEST_CASE("combined bound holds on cubic-perturbed objectives") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(400 + static_cast<std::uint64_t>(inst));
    QuadraticObjective base =
        make_random_quadratic(12, 0.1, 1.0, false, 1500 + static_cast<std::uint64_t>(inst));
    const CubicPerturbedObjective f(std::move(base), 5e-4);
    Vec theta0;
    for (;;) {
      theta0 = random_vec(rng, 12);
      const Vec g = f.gradient(theta0);
      bool ok = true;
      for (double x : g) {
        if (std::abs(x) < 1e-3) { ok = false; break; }
      }
      if (ok) break;
    }
    const Vec g0 = f.gradient(theta0);
    double min_abs = 1e9;
    for (double x : g0) min_abs = std::min(min_abs, std::abs(x));
    const BoundReport rep = displacement_error(f, theta0, 1e-3, 3, 0.5 * min_abs);
    CHECK(rep.e_nonquad > 0.0);
    CHECK(rep.satisfied);
  }
}

TEST_CASE("hypothesis overrides are reported when measurements exceed them") {
  Rng rng(9);
  const QuadraticObjective q = make_random_quadratic(8, 0.1, 1.0, false, 52);
  const Vec theta0 = floor_theta(q, rng, 1e-3);
  BoundOverrides overrides;
  overrides.ratio_bound = 1e-6;  // impossible: measured rates are near 1
  const BoundReport rep = displacement_error(q, theta0, 1e-3, 3, 1e-4, overrides);
  CHECK(!rep.hypotheses_ok);
  CHECK(!rep.violation.empty());
}

TEST_CASE("alignment: alpha = 0 gives |g0|^2 and a trivially true condition") {
  const QuadraticObjective q = make_random_quadratic(6, 0.1, 1.0, false, 66);
  Rng rng(12);
  const Vec theta0 = random_vec(rng, 6);
  const AlignmentReport rep = alignment_check(q, theta0, 0.1, 3, 0.0);
  CHECK(rep.condition_lhs == 0.0);
  CHECK(rep.condition_holds);
  const Vec g0 = q.gradient(theta0);
  CHECK(rep.modelled_inner == doctest::Approx(dot(g0, g0)).epsilon(1e-12));
}

TEST_CASE("alignment condition becomes true as eta shrinks and implies positivity") {
  const QuadraticObjective q = make_random_quadratic(10, 0.1, 1.0, false, 67);
  Rng rng(13);
  const Vec theta0 = random_vec(rng, 10);
  double eta = 1.0;
  AlignmentReport rep;
  int tries = 0;
  do {
    eta *= 0.5;
    rep = alignment_check(q, theta0, eta, 5, 1.0);
    ++tries;
  } while (!rep.condition_holds && tries < 60);
  CHECK(rep.condition_holds);
  CHECK(rep.modelled_inner > 0.0);
}

TEST_CASE("alignment: measured cosine is positive on stable diagonal quadratics") {
  const QuadraticObjective q = make_random_quadratic(8, 0.1, 1.0, true, 68);
  Rng rng(14);
  const Vec theta0 = random_vec(rng, 8);
  const AlignmentReport rep = alignment_check(q, theta0, 0.5, 3, 1.0);
  CHECK(rep.measured_cos > 0.0);
}

TEST_CASE("interpolation: triangle identity holds in every regime") {
  for (int inst = 0; inst < 30; ++inst) {
    Rng rng(500 + static_cast<std::uint64_t>(inst));
    const QuadraticObjective q =
        make_random_quadratic(10, 0.1, 1.0, false, 1700 + static_cast<std::uint64_t>(inst));
    const Vec theta0 = floor_theta(q, rng, 1e-3);
    const double eta = 3e-3;
    const int k = 5;
    const SurrogatePaths paths = run_displacement_surrogate(q, theta0, eta, k, 1e-6);
    const double err_full = norm2(sub(paths.theta_k_emp, paths.theta_k_true));
    const double base_gap = norm2(sub(theta0, paths.theta_k_true));
    for (double alpha : {0.25, 0.5, 0.75}) {
      const double err_alpha = interpolation_error(q, theta0, eta, k, 1e-6, alpha);
      CHECK(err_alpha <= alpha * err_full + (1.0 - alpha) * base_gap + 1e-12);
    }
  }
}

TEST_CASE("interpolation realizes less error than full extrapolation when the prediction overshoots") {
  // Bundled overshoot suite: aggressive steps near the stability edge with
  // a deep virtual horizon make the geometric prediction overshoot the true
  // K-step point by more than the displacement itself — the regime the
  // partial blend guards against. Membership is decided by the observable
  // condition |thetaK_emp - thetaK_true| > |thetaK_true - theta0|.
  int bundled = 0;
  std::size_t scanned = 0;
  const int k = 10;
  while (bundled < 30 && scanned < 200) {
    const std::uint64_t seed = 2500 + static_cast<std::uint64_t>(scanned++);
    Rng rng(seed);
    const QuadraticObjective q = make_random_quadratic(12, 0.1, 1.0, false, seed * 3);
    const double eta = 1.9 / spectral_norm_sym(q.hessian_matrix());
    Vec theta0(12);
    for (auto& x : theta0) x = rng.normal();
    const SurrogatePaths paths = run_displacement_surrogate(q, theta0, eta, k, 1e-12);
    const double err_full = norm2(sub(paths.theta_k_emp, paths.theta_k_true));
    const double disp = norm2(sub(paths.theta_k_true, theta0));
    if (err_full <= disp) continue;  // not an overshoot instance
    ++bundled;
    const double err_half = interpolation_error(q, theta0, eta, k, 1e-12, 0.5);
    CHECK(err_half < err_full);
  }
  CHECK(bundled == 30);
}

TEST_CASE("budget check: worked example and edge cases") {
  const QuadraticObjective q = make_random_quadratic(2, 0.5, 1.0, true, 81);
  Matrix h(2, 2);
  h << 1.0, 0.0, 0.0, 0.5;
  const QuadraticObjective fixed(h);
  const BudgetReport rep = budget_check(fixed, {1.0, 2.0}, 0.1, 3, 5);
  CHECK(rep.ok());
  CHECK(rep.passes == 15);            // three passes per outer step
  CHECK(rep.expected_passes == 15);   // matches 20 GD steps' landing point
  CHECK(rep.max_rel_err <= 1e-9);

  const BudgetReport zero = budget_check(fixed, {1.0, 2.0}, 0.1, 3, 0);
  CHECK(zero.ok());
  CHECK(zero.passes == 0);

  // strict inequality away from the minimizer when mass spreads across modes
  CHECK(rep.loss_after < rep.loss_bound);

  CHECK_THROWS_AS(budget_check(fixed, {1.0, 2.0}, 3.0, 3, 1), std::invalid_argument);
  const QuadraticObjective nondiag = make_random_quadratic(4, 0.2, 1.0, false, 82);
  CHECK_THROWS_AS(budget_check(nondiag, {1.0, 1.0, 1.0, 1.0}, 0.1, 3, 1),
                  std::invalid_argument);
}

TEST_CASE("budget inequality holds across K, m, and seeds") {
  for (int k : {3, 5, 10}) {
    for (long m : {1L, 4L, 10L}) {
      for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        Rng rng(seed);
        const QuadraticObjective q = make_random_quadratic(6, 0.1, 1.0, true, seed * 31);
        const double eta = rng.uniform(0.1, 1.0);
        const Vec theta0 = random_vec(rng, 6);
        const BudgetReport rep = budget_check(q, theta0, eta, k, m);
        CHECK(rep.ok());
      }
    }
  }
}

}  // TEST_SUITE
