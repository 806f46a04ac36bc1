#pragma once

#include <limits>

#include "gxpo/gxpo.hpp"
#include "gxpo/optimizer.hpp"
#include "gxpo/oracle.hpp"
#include "gxpo/vec.hpp"

namespace gxpo {

struct SfpoConfig {
  int fast_steps = 3;  // K >= 1 explicit inner steps
  double alpha = 0.5;  // slow-weight blend in [0, 1]
  // Gate threshold on the corrective-gradient z-score; shares the GXPO
  // machinery. +inf leaves the gate off.
  double tau = std::numeric_limits<double>::infinity();
  std::size_t window = 20;
  double eps_z = 1e-8;

  void validate() const;
};

// Single-pass GRPO-surrogate update: one gradient, one optimizer step.
StepResult grpo_step(GradientOracle& oracle, const Vec& theta, Optimizer& opt);

// SFPO-style lookahead: K explicit fast steps (one fresh gradient each),
// a blend theta~ = theta + alpha * (theta_K - theta), then one corrective
// gradient at theta~ and a final optimizer step. K+1 gradient evaluations
// per active step. Optimizer moments persist across the blend, matching the
// GXPO convention. When gated (z >= tau), subsequent steps are single-pass.
StepResult sfpo_step(GradientOracle& oracle, const Vec& theta, Optimizer& opt,
                     const SfpoConfig& cfg, GxpoRuntime& rt);

}  // namespace gxpo
