#include "gxpo/theory.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gxpo/gxpo.hpp"
#include "gxpo/optimizer.hpp"
#include "gxpo/oracle.hpp"

namespace gxpo {

namespace {

// Direct summation; deliberately not the closed form the update rule uses.
double geom_sum_direct(double x, int n) {
  double s = 0.0;
  double p = 1.0;
  for (int k = 0; k < n; ++k) {
    s += p;
    p *= x;
  }
  return s;
}

}  // namespace

SurrogatePaths run_displacement_surrogate(const SmoothObjective& f,
                                          const Vec& theta0, double eta, int K,
                                          double delta) {
  if (K < 2) throw std::invalid_argument("displacement surrogate: K must be >= 2");
  if (delta < 0.0) throw std::invalid_argument("displacement surrogate: delta must be >= 0");
  const std::size_t d = f.dimension();
  if (theta0.size() != d) {
    throw std::invalid_argument("displacement surrogate: theta0 dimension mismatch");
  }

  SurrogatePaths out;
  out.g0 = f.gradient(theta0);
  const Matrix h0 = f.hessian(theta0);
  const Eigen::Map<const Eigen::VectorXd> g0e(out.g0.data(),
                                              static_cast<Eigen::Index>(d));
  const Eigen::VectorXd hg0 = h0 * g0e;

  out.g1_model.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.g1_model[i] = out.g0[i] - eta * hg0[static_cast<Eigen::Index>(i)];
  }

  out.ratios.assign(d, std::numeric_limits<double>::quiet_NaN());
  out.active.assign(d, 0);
  out.theta_k_emp.resize(d);
  out.theta_k_diag.resize(d);
  out.ratio_bound = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double rbar = 1.0 - eta * h0(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(i));
    out.ratio_bound = std::max(out.ratio_bound, std::abs(rbar));
    out.theta_k_diag[i] = theta0[i] - eta * out.g0[i] * geom_sum_direct(rbar, K);
    if (std::abs(out.g0[i]) > delta) {
      out.active[i] = 1;
      const double r = out.g1_model[i] / out.g0[i];
      out.ratios[i] = r;
      out.ratio_bound = std::max(out.ratio_bound, std::abs(r));
      out.theta_k_emp[i] = theta0[i] - eta * out.g0[i] * geom_sum_direct(r, K);
    } else {
      // no ratio formed: keep the observed two-probe displacement
      out.theta_k_emp[i] = theta0[i] - eta * (out.g0[i] + out.g1_model[i]);
    }
  }

  const auto traj = gd_trajectory(f, theta0, eta, K);
  out.theta_k_true = traj.back().theta;
  out.grad_bound = 0.0;
  for (int n = 0; n < K; ++n) {
    out.grad_bound = std::max(out.grad_bound, norm2(traj[static_cast<std::size_t>(n)].grad));
  }
  return out;
}

BoundReport displacement_error(const SmoothObjective& f, const Vec& theta0,
                               double eta, int K, double delta,
                               const BoundOverrides& overrides) {
  const SurrogatePaths paths = run_displacement_surrogate(f, theta0, eta, K, delta);
  const std::size_t d = f.dimension();
  const Matrix h0 = f.hessian(theta0);

  BoundReport rep;
  rep.virtual_depth = K;
  rep.eta = eta;
  rep.delta = delta;
  rep.m3 = f.third_derivative_bound();

  // spectral quantities
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h0, Eigen::EigenvaluesOnly);
  double gamma = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    gamma = std::max(gamma, std::abs(1.0 - eta * solver.eigenvalues()[i]));
  }
  rep.rho_max = std::max(1.0, gamma);

  Matrix h_off = h0;
  for (Eigen::Index i = 0; i < h_off.rows(); ++i) h_off(i, i) = 0.0;
  const double h_off_spec = spectral_norm_sym(h_off);
  double h_off_inf = 0.0;
  for (Eigen::Index i = 0; i < h_off.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < h_off.cols(); ++j) row += std::abs(h_off(i, j));
    h_off_inf = std::max(h_off_inf, row);
  }

  rep.ratio_bound = overrides.ratio_bound.value_or(paths.ratio_bound);
  rep.grad_bound = overrides.grad_bound.value_or(paths.grad_bound);
  if (overrides.ratio_bound && paths.ratio_bound > *overrides.ratio_bound) {
    rep.hypotheses_ok = false;
    rep.violation = "measured ratio bound " + std::to_string(paths.ratio_bound) +
                    " exceeds configured R";
  }
  if (overrides.grad_bound && paths.grad_bound > *overrides.grad_bound) {
    rep.hypotheses_ok = false;
    if (!rep.violation.empty()) rep.violation += "; ";
    rep.violation += "measured gradient bound " + std::to_string(paths.grad_bound) +
                     " exceeds configured G";
  }

  const double r = rep.ratio_bound;
  rep.c_kr = 0.0;
  for (int n = 1; n < K; ++n) rep.c_kr += n * std::pow(r, n - 1);
  rep.d_kr = 2.0 + geom_sum_direct(r, K);

  const double g0_norm = norm2(paths.g0);
  rep.e_off = 0.5 * K * (K - 1) * eta * eta * h_off_spec * g0_norm *
              std::pow(rep.rho_max, K - 2);
  rep.e_nonquad = K * (K - 1) * (2 * K - 1) / 12.0 * std::pow(eta, 3) * rep.m3 *
                  rep.grad_bound * rep.grad_bound * std::pow(rep.rho_max, K - 1);

  // E_ratio: active-set Lipschitz term plus inactive-coordinate fallback.
  double g0_active_norm2 = 0.0;
  double g0_inactive_l1 = 0.0;
  double hg0_inactive_l1 = 0.0;
  const Eigen::Map<const Eigen::VectorXd> g0e(paths.g0.data(),
                                              static_cast<Eigen::Index>(d));
  const Eigen::VectorXd hg0 = h0 * g0e;
  for (std::size_t i = 0; i < d; ++i) {
    if (paths.active[i]) {
      g0_active_norm2 += paths.g0[i] * paths.g0[i];
    } else {
      g0_inactive_l1 += std::abs(paths.g0[i]);
      hg0_inactive_l1 += std::abs(hg0[static_cast<Eigen::Index>(i)]);
    }
  }
  const double active_factor = h_off_inf * norm_inf(paths.g0) * std::sqrt(g0_active_norm2);
  const double active_term =
      active_factor == 0.0 ? 0.0 : eta * eta * rep.c_kr * active_factor / delta;
  rep.e_ratio = active_term + eta * rep.d_kr * g0_inactive_l1 +
                eta * eta * hg0_inactive_l1;

  rep.measured_error = norm2(sub(paths.theta_k_emp, paths.theta_k_true));
  // The 1e-10 floor absorbs accumulated roundoff when the analytic bound is
  // exactly zero (diagonal quadratics).
  rep.satisfied = rep.measured_error <= rep.bound_total() ||
                  rep.measured_error <= 1e-10;
  return rep;
}

Vec ratio_bias_check(const QuadraticObjective& q, const Vec& theta0, double eta) {
  const std::size_t d = q.dimension();
  if (theta0.size() != d) {
    throw std::invalid_argument("ratio_bias_check: theta0 dimension mismatch");
  }
  const Vec g0 = q.gradient(theta0);
  for (std::size_t i = 0; i < d; ++i) {
    if (g0[i] == 0.0) {
      throw std::invalid_argument(
          "ratio_bias_check: zero gradient coordinate " + std::to_string(i) +
          "; regenerate theta0");
    }
  }
  Vec theta1(d);
  for (std::size_t i = 0; i < d; ++i) theta1[i] = theta0[i] - eta * g0[i];
  const Vec g1 = q.gradient(theta1);
  const Matrix& h = q.hessian_matrix();
  const Eigen::Map<const Eigen::VectorXd> g0e(g0.data(),
                                              static_cast<Eigen::Index>(d));
  const Eigen::VectorXd hg0 = h * g0e;

  Vec residual(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double r = g1[i] / g0[i];
    const double rbar = 1.0 - eta * h(ii, ii);
    const double off = hg0[ii] - h(ii, ii) * g0[i];
    residual[i] = (r - rbar) + eta * off / g0[i];
  }
  return residual;
}

namespace {

// Extrapolated K-step point of the clean surrogate (all nonzero-gradient
// coordinates active, no clamps) on a quadratic, plus the blend point.
struct CleanExtrapolation {
  Vec g0;
  Vec theta_k;
  Vec theta_tilde;
};

CleanExtrapolation clean_extrapolate(const QuadraticObjective& q,
                                     const Vec& theta0, double eta, int K,
                                     double alpha) {
  const std::size_t d = q.dimension();
  CleanExtrapolation out;
  out.g0 = q.gradient(theta0);
  Vec theta1(d);
  for (std::size_t i = 0; i < d; ++i) theta1[i] = theta0[i] - eta * out.g0[i];
  const Vec g1 = q.gradient(theta1);
  Vec theta2(d);
  for (std::size_t i = 0; i < d; ++i) theta2[i] = theta1[i] - eta * g1[i];

  out.theta_k.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (out.g0[i] == 0.0) {
      out.theta_k[i] = theta2[i];
      continue;
    }
    const double r = g1[i] / out.g0[i];
    const double s2 = geom_sum_direct(r, 2);
    if (std::abs(s2) < 1e-12) {
      out.theta_k[i] = theta2[i];
      continue;
    }
    const double scale = geom_sum_direct(r, K) / s2;
    out.theta_k[i] = theta0[i] + (theta2[i] - theta0[i]) * scale;
  }
  out.theta_tilde = reposition(theta0, out.theta_k, alpha);
  return out;
}

}  // namespace

AlignmentReport alignment_check(const QuadraticObjective& q, const Vec& theta0,
                                double eta, int K, double alpha) {
  const CleanExtrapolation ext = clean_extrapolate(q, theta0, eta, K, alpha);
  const Matrix& h = q.hessian_matrix();
  const std::size_t d = q.dimension();

  AlignmentReport rep;
  rep.condition_rhs = norm2(ext.g0);
  rep.condition_lhs =
      alpha * spectral_norm_sym(h) * norm2(sub(ext.theta_k, theta0));
  rep.condition_holds = rep.condition_lhs < rep.condition_rhs;

  const Vec disp = sub(ext.theta_tilde, theta0);
  const Eigen::Map<const Eigen::VectorXd> dispe(disp.data(),
                                                static_cast<Eigen::Index>(d));
  const Eigen::VectorXd hdisp = h * dispe;
  Vec modelled(d);
  for (std::size_t i = 0; i < d; ++i) {
    modelled[i] = ext.g0[i] + hdisp[static_cast<Eigen::Index>(i)];
  }
  rep.modelled_inner = dot(ext.g0, modelled);
  rep.measured_cos = cosine(ext.g0, q.gradient(ext.theta_tilde));
  return rep;
}

double interpolation_error(const SmoothObjective& f, const Vec& theta0,
                           double eta, int K, double delta, double alpha) {
  const SurrogatePaths paths = run_displacement_surrogate(f, theta0, eta, K, delta);
  const Vec theta_tilde = reposition(theta0, paths.theta_k_emp, alpha);
  return norm2(sub(theta_tilde, paths.theta_k_true));
}

BudgetReport budget_check(const QuadraticObjective& q, const Vec& theta0,
                          double eta, int K, long outer_steps) {
  if (!q.diagonal()) {
    throw std::invalid_argument("budget_check: requires a diagonal quadratic");
  }
  if (outer_steps < 0) {
    throw std::invalid_argument("budget_check: outer_steps must be >= 0");
  }
  const Matrix& h = q.hessian_matrix();
  double mu = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    if (!(h(i, i) > 0.0) || eta * h(i, i) > 1.0) {
      throw std::invalid_argument(
          "budget_check: needs h_i > 0 and eta * h_i <= 1");
    }
    mu = std::min(mu, h(i, i));
  }

  GxpoConfig cfg;
  cfg.virtual_depth = K;
  cfg.alpha = 1.0;
  cfg.delta = 0.0;
  cfg.tau = std::numeric_limits<double>::infinity();
  cfg.eps_r = 1e-12;
  cfg.ratio_clamp = 1e18;

  GradientOracle oracle(q);
  Optimizer opt({OptimizerKind::PlainGd, eta}, q.dimension());
  GxpoRuntime rt;
  Vec theta = theta0;
  for (long s = 0; s < outer_steps; ++s) {
    theta = gxpo_step(oracle, theta, opt, cfg, rt).theta;
  }

  const long gd_steps = (K + 1) * outer_steps;
  const Vec theta_gd = gd_trajectory(q, theta0, eta, static_cast<int>(gd_steps))
                           .back()
                           .theta;

  BudgetReport rep;
  rep.virtual_depth = K;
  rep.outer_steps = outer_steps;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    rep.max_rel_err =
        std::max(rep.max_rel_err, rel_err(theta[i], theta_gd[i], theta0[i]));
  }
  rep.point_match = rep.max_rel_err <= 1e-9;

  const double rho = (1.0 - eta * mu) * (1.0 - eta * mu);
  rep.loss_after = q.loss(theta);
  rep.loss_bound = std::pow(rho, static_cast<double>(gd_steps)) * q.loss(theta0);
  rep.loss_ok = rep.loss_after <= rep.loss_bound;

  rep.passes = oracle.pass_count();
  rep.expected_passes = 3 * outer_steps;
  rep.passes_ok = rep.passes == rep.expected_passes;
  return rep;
}

}  // namespace gxpo
