#include "gxpo/baselines.hpp"

#include <stdexcept>

namespace gxpo {

void SfpoConfig::validate() const {
  if (fast_steps < 1) {
    throw std::invalid_argument("sfpo: fast_steps must be >= 1");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("sfpo: alpha must lie in [0, 1]");
  }
  if (window < 2 || !(eps_z > 0.0)) {
    throw std::invalid_argument("sfpo: bad gate parameters");
  }
}

StepResult grpo_step(GradientOracle& oracle, const Vec& theta, Optimizer& opt) {
  if (theta.size() != oracle.dimension()) {
    throw std::invalid_argument("grpo_step: theta dimension mismatch");
  }
  StepDiagnostics diag;
  diag.phase = Phase::Fallback;
  diag.passes = 1;
  const Vec g = oracle.gradient(theta);
  require_finite(g, "grpo_step: non-finite gradient");
  diag.norm_g0 = norm2(g);
  Vec next = opt.step(theta, g);
  require_finite(next, "grpo_step: non-finite parameters");
  return {std::move(next), diag};
}

StepResult sfpo_step(GradientOracle& oracle, const Vec& theta, Optimizer& opt,
                     const SfpoConfig& cfg, GxpoRuntime& rt) {
  cfg.validate();
  if (theta.size() != oracle.dimension()) {
    throw std::invalid_argument("sfpo_step: theta dimension mismatch");
  }

  StepDiagnostics diag;
  diag.step = rt.step;

  if (!rt.active()) {
    const Vec g = oracle.gradient(theta);
    diag.norm_g0 = norm2(g);
    diag.phase = Phase::Fallback;
    diag.passes = 1;
    Vec next = opt.step(theta, g);
    require_finite(next, "sfpo_step: non-finite parameters (fallback)");
    ++rt.step;
    return {std::move(next), diag};
  }

  diag.phase = Phase::Active;
  diag.passes = cfg.fast_steps + 1;

  Vec fast = theta;
  Vec g0;
  for (int k = 0; k < cfg.fast_steps; ++k) {
    const Vec g = oracle.gradient(fast);
    if (k == 0) {
      g0 = g;
      diag.norm_g0 = norm2(g);
    }
    fast = opt.step(fast, g);
    require_finite(fast, "sfpo_step: non-finite fast iterate");
  }

  const Vec theta_tilde = reposition(theta, fast, cfg.alpha);
  const Vec g_slow = oracle.gradient(theta_tilde);
  diag.norm_gslow = norm2(g_slow);
  diag.cos_g0_gslow = cosine(g0, g_slow);

  Vec next = opt.step(theta_tilde, g_slow);
  require_finite(next, "sfpo_step: non-finite parameters after correction");

  if (rt.buffer.size() > 1) {
    diag.z = z_score(rt.buffer, diag.norm_gslow, cfg.eps_z);
    if (diag.z && *diag.z >= cfg.tau && !rt.shutoff_step) {
      rt.shutoff_step = rt.step + 1;
    }
  }
  rt.buffer.push_back(diag.norm_gslow);
  while (rt.buffer.size() > cfg.window) rt.buffer.pop_front();

  ++rt.step;
  return {std::move(next), diag};
}

}  // namespace gxpo
