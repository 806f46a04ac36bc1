#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gxpo/optimizer.hpp"
#include "gxpo/oracle.hpp"
#include "gxpo/vec.hpp"

namespace gxpo {

struct GxpoConfig {
  int virtual_depth = 5;  // K >= 2, lookahead steps being approximated
  double alpha = 0.5;     // reposition strength in [0, 1]
  double delta = 1e-8;    // active-coordinate threshold on |g0_i|, >= 0
  double tau = 0.5;       // z-score trigger; +inf disables the gate
  std::size_t window = 20;  // rolling-buffer capacity w >= 2
  double eps_z = 1e-8;      // z-score denominator stabilizer
  double eps_r = 1e-6;      // geometric-sum r~1 branch width, also the
                            // S_2 demotion threshold
  double ratio_clamp = 10.0;  // retention ratios clamped to [-R_max, R_max]

  // Ablation: snapshot optimizer moments before the probe steps and restore
  // them at reposition, so the corrective step sees pre-probe moments.
  // Default (false) lets the probe steps' moments persist.
  bool restore_moments_at_reposition = false;

  void validate() const;
};

// Per-run mutable state of the GXPO outer loop.
struct GxpoRuntime {
  std::deque<double> buffer;          // recent corrective-gradient L2 norms
  std::optional<long> shutoff_step;   // s*; once set it never changes
  long step = 0;                      // outer-step index t

  bool active() const { return !shutoff_step || step < *shutoff_step; }
};

enum class Phase { Active, Fallback };

inline const char* phase_name(Phase p) {
  return p == Phase::Active ? "active" : "fallback";
}

// One row of the mechanism diagnostics. Quantities that a phase does not
// produce are NaN (empty CSV cells).
struct StepDiagnostics {
  long step = 0;
  Phase phase = Phase::Active;
  int passes = 0;  // gradient evaluations this step
  double norm_g0 = std::numeric_limits<double>::quiet_NaN();
  double norm_g1 = std::numeric_limits<double>::quiet_NaN();
  double norm_gslow = std::numeric_limits<double>::quiet_NaN();
  double cos_g0_gslow = std::numeric_limits<double>::quiet_NaN();
  double active_fraction = std::numeric_limits<double>::quiet_NaN();
  double retention_mean = std::numeric_limits<double>::quiet_NaN();
  double retention_std = std::numeric_limits<double>::quiet_NaN();
  double scale_mean = std::numeric_limits<double>::quiet_NaN();
  double disp_ratio = std::numeric_limits<double>::quiet_NaN();  // |thetaK-theta0| / |theta2-theta0|
  std::optional<double> z;  // absent during warm-up and fallback
};

std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const StepDiagnostics& d);

// Per-coordinate retention ratios g1_i/g0_i on the active set
// { i : |g0_i| > delta }, clamped to [-ratio_clamp, ratio_clamp].
// Inactive coordinates form no ratio (NaN placeholder).
struct RatioResult {
  Vec ratios;
  std::vector<std::uint8_t> active;
  std::size_t active_count = 0;
};
RatioResult retention_ratios(const Vec& g0, const Vec& g1, double delta,
                             double ratio_clamp);

// S_n(x) = sum_{k=0}^{n-1} x^k, evaluated as (1 - x^n) / (1 - x) with an
// explicit branch returning n when |1 - x| < eps_r (or x == 1 exactly).
double geometric_sum(double x, int n, double eps_r);

// Extrapolation factors S_K(r_i) / S_2(r_i) for active coordinates, 1 for
// inactive ones. Active coordinates whose two-step sum is within eps_r of 0
// (ratio near -1) are demoted to inactive rather than divided through.
struct ScaleResult {
  Vec scale;
  std::vector<std::uint8_t> active;  // post-demotion mask
  std::size_t active_count = 0;
  std::size_t demoted = 0;
};
ScaleResult scale_factors(const Vec& ratios, const std::vector<std::uint8_t>& active,
                          int virtual_depth, double eps_r);

// theta0 + (theta2 - theta0) .* scale
Vec extrapolate(const Vec& theta0, const Vec& theta2, const Vec& scale);

// theta0 + alpha * (theta_k - theta0)
Vec reposition(const Vec& theta0, const Vec& theta_k, double alpha);

// (norm - mean) / (std + eps_z) against the buffer contents, which must not
// yet include `norm`. Population standard deviation. Buffers with fewer than
// two entries yield no score (and can therefore never trigger the gate).
std::optional<double> z_score(const std::deque<double>& buffer, double norm,
                              double eps_z);

struct StepResult {
  Vec theta;
  StepDiagnostics diag;
};

// One GXPO outer step.
//
// Active phase (t < s*): probe gradient g0 at theta, fast step, probe g1,
// fast step, per-coordinate geometric extrapolation of the observed two-step
// displacement to a virtual K-step point, blend toward it with alpha, then a
// corrective gradient g_slow at the repositioned point and a final optimizer
// step from there. Three gradient evaluations regardless of K. After the
// update, the corrective norm is z-scored against the rolling buffer; z >= tau
// permanently disables extrapolation from the next step on (s* = t + 1).
// The norm is pushed into the buffer after the check.
//
// Fallback phase (t >= s*): one gradient evaluation, one optimizer step.
//
// The probe ratios always see raw oracle gradients; optional gradient
// clipping applies inside the optimizer only.
StepResult gxpo_step(GradientOracle& oracle, const Vec& theta, Optimizer& opt,
                     const GxpoConfig& cfg, GxpoRuntime& rt);

}  // namespace gxpo
