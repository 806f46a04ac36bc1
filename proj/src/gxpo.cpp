#include "gxpo/gxpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gxpo {

void GxpoConfig::validate() const {
  if (virtual_depth < 2) {
    throw std::invalid_argument("gxpo: virtual_depth must be >= 2");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("gxpo: alpha must lie in [0, 1]");
  }
  if (delta < 0.0) {
    throw std::invalid_argument("gxpo: delta must be >= 0");
  }
  if (window < 2) {
    throw std::invalid_argument("gxpo: window must be >= 2");
  }
  if (!(eps_z > 0.0) || !(ratio_clamp > 0.0)) {
    throw std::invalid_argument("gxpo: eps_z and ratio_clamp must be positive");
  }
  if (!(eps_r >= 0.0)) {
    throw std::invalid_argument("gxpo: eps_r must be >= 0");
  }
}

RatioResult retention_ratios(const Vec& g0, const Vec& g1, double delta,
                             double ratio_clamp) {
  require_same_dim(g0, g1, "retention_ratios");
  const std::size_t d = g0.size();
  RatioResult out;
  out.ratios.assign(d, std::numeric_limits<double>::quiet_NaN());
  out.active.assign(d, 0);
  for (std::size_t i = 0; i < d; ++i) {
    if (std::abs(g0[i]) > delta) {
      out.active[i] = 1;
      ++out.active_count;
      const double r = g1[i] / g0[i];
      out.ratios[i] = std::clamp(r, -ratio_clamp, ratio_clamp);
    }
  }
  return out;
}

double geometric_sum(double x, int n, double eps_r) {
  if (n < 1) throw std::invalid_argument("geometric_sum: n must be >= 1");
  if (x == 1.0 || std::abs(1.0 - x) < eps_r) return static_cast<double>(n);
  return (1.0 - std::pow(x, n)) / (1.0 - x);
}

ScaleResult scale_factors(const Vec& ratios, const std::vector<std::uint8_t>& active,
                          int virtual_depth, double eps_r) {
  if (virtual_depth < 2) {
    throw std::invalid_argument("scale_factors: virtual_depth must be >= 2");
  }
  if (ratios.size() != active.size()) {
    throw std::invalid_argument("scale_factors: mask dimension mismatch");
  }
  ScaleResult out;
  out.scale.assign(ratios.size(), 1.0);
  out.active = active;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!active[i]) continue;
    const double s2 = geometric_sum(ratios[i], 2, eps_r);
    if (std::abs(s2) < std::max(eps_r, 1e-300)) {
      // ratio near -1: the two-step sum vanishes, keep the observed
      // displacement instead of dividing through
      out.active[i] = 0;
      ++out.demoted;
      continue;
    }
    out.scale[i] = geometric_sum(ratios[i], virtual_depth, eps_r) / s2;
    ++out.active_count;
  }
  return out;
}

Vec extrapolate(const Vec& theta0, const Vec& theta2, const Vec& scale) {
  require_same_dim(theta0, theta2, "extrapolate");
  require_same_dim(theta0, scale, "extrapolate");
  Vec out(theta0.size());
  for (std::size_t i = 0; i < theta0.size(); ++i) {
    out[i] = theta0[i] + (theta2[i] - theta0[i]) * scale[i];
    if (!std::isfinite(out[i])) {
      throw NonFiniteError("extrapolate: non-finite coordinate", i);
    }
  }
  return out;
}

Vec reposition(const Vec& theta0, const Vec& theta_k, double alpha) {
  require_same_dim(theta0, theta_k, "reposition");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("reposition: alpha must lie in [0, 1]");
  }
  Vec out(theta0.size());
  for (std::size_t i = 0; i < theta0.size(); ++i) {
    out[i] = theta0[i] + alpha * (theta_k[i] - theta0[i]);
  }
  return out;
}

std::optional<double> z_score(const std::deque<double>& buffer, double norm,
                              double eps_z) {
  if (buffer.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (double x : buffer) mean += x;
  mean /= static_cast<double>(buffer.size());
  double var = 0.0;
  for (double x : buffer) var += (x - mean) * (x - mean);
  var /= static_cast<double>(buffer.size());
  return (norm - mean) / (std::sqrt(var) + eps_z);
}

namespace {

struct ActiveStats {
  double retention_mean = std::numeric_limits<double>::quiet_NaN();
  double retention_std = std::numeric_limits<double>::quiet_NaN();
  double scale_mean = std::numeric_limits<double>::quiet_NaN();
};

// Means over the post-demotion active set; the extrapolation acts only there.
ActiveStats active_stats(const Vec& ratios, const Vec& scale,
                         const std::vector<std::uint8_t>& active) {
  ActiveStats s;
  std::size_t n = 0;
  double rsum = 0.0, ssum = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!active[i]) continue;
    ++n;
    rsum += ratios[i];
    ssum += scale[i];
  }
  if (n == 0) return s;
  s.retention_mean = rsum / static_cast<double>(n);
  s.scale_mean = ssum / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!active[i]) continue;
    const double d = ratios[i] - s.retention_mean;
    var += d * d;
  }
  s.retention_std = std::sqrt(var / static_cast<double>(n));
  return s;
}

}  // namespace

StepResult gxpo_step(GradientOracle& oracle, const Vec& theta, Optimizer& opt,
                     const GxpoConfig& cfg, GxpoRuntime& rt) {
  cfg.validate();
  if (theta.size() != oracle.dimension()) {
    throw std::invalid_argument("gxpo_step: theta dimension mismatch");
  }

  StepDiagnostics diag;
  diag.step = rt.step;

  const Vec g0 = oracle.gradient(theta);
  diag.norm_g0 = norm2(g0);

  if (!rt.active()) {
    // Fallback phase: single-step GRPO update.
    diag.phase = Phase::Fallback;
    diag.passes = 1;
    Vec next = opt.step(theta, g0);
    require_finite(next, "gxpo_step: non-finite parameters (fallback)");
    ++rt.step;
    return {std::move(next), diag};
  }

  diag.phase = Phase::Active;
  diag.passes = 3;

  std::optional<Optimizer::Snapshot> snap;
  if (cfg.restore_moments_at_reposition) snap = opt.snapshot();

  const Vec theta1 = opt.step(theta, g0);
  require_finite(theta1, "gxpo_step: non-finite parameters after first probe");
  const Vec g1 = oracle.gradient(theta1);
  diag.norm_g1 = norm2(g1);
  const Vec theta2 = opt.step(theta1, g1);
  require_finite(theta2, "gxpo_step: non-finite parameters after second probe");

  const RatioResult ratios = retention_ratios(g0, g1, cfg.delta, cfg.ratio_clamp);
  const ScaleResult scales =
      scale_factors(ratios.ratios, ratios.active, cfg.virtual_depth, cfg.eps_r);
  const Vec theta_k = extrapolate(theta, theta2, scales.scale);
  const Vec theta_tilde = reposition(theta, theta_k, cfg.alpha);
  require_finite(theta_tilde, "gxpo_step: non-finite repositioned parameters");

  diag.active_fraction = theta.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : static_cast<double>(scales.active_count) /
                                   static_cast<double>(theta.size());
  const ActiveStats stats = active_stats(ratios.ratios, scales.scale, scales.active);
  diag.retention_mean = stats.retention_mean;
  diag.retention_std = stats.retention_std;
  diag.scale_mean = stats.scale_mean;
  const double disp2 = norm2(sub(theta2, theta));
  if (disp2 > 0.0) diag.disp_ratio = norm2(sub(theta_k, theta)) / disp2;

  if (snap) opt.restore(*snap);

  const Vec g_slow = oracle.gradient(theta_tilde);
  diag.norm_gslow = norm2(g_slow);
  diag.cos_g0_gslow = cosine(g0, g_slow);

  Vec next = opt.step(theta_tilde, g_slow);
  require_finite(next, "gxpo_step: non-finite parameters after correction");

  // Gate: score the corrective norm against the buffer before inserting it.
  if (rt.buffer.size() > 1) {
    diag.z = z_score(rt.buffer, diag.norm_gslow, cfg.eps_z);
    if (diag.z && *diag.z >= cfg.tau && !rt.shutoff_step) {
      rt.shutoff_step = rt.step + 1;  // permanently disable extrapolation
    }
  }
  rt.buffer.push_back(diag.norm_gslow);
  while (rt.buffer.size() > cfg.window) rt.buffer.pop_front();

  ++rt.step;
  return {std::move(next), diag};
}

std::string diagnostics_csv_header() {
  return "step,phase,passes,norm_g0,norm_g1,norm_gslow,cos_g0_gslow,"
         "active_fraction,retention_mean,retention_std,scale_mean,disp_ratio,"
         "z_score";
}

namespace {

std::string fmt_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string diagnostics_csv_row(const StepDiagnostics& d) {
  std::ostringstream os;
  os << d.step << ',' << phase_name(d.phase) << ',' << d.passes << ','
     << fmt_cell(d.norm_g0) << ',' << fmt_cell(d.norm_g1) << ','
     << fmt_cell(d.norm_gslow) << ',' << fmt_cell(d.cos_g0_gslow) << ','
     << fmt_cell(d.active_fraction) << ',' << fmt_cell(d.retention_mean) << ','
     << fmt_cell(d.retention_std) << ',' << fmt_cell(d.scale_mean) << ','
     << fmt_cell(d.disp_ratio) << ','
     << (d.z ? fmt_cell(*d.z) : std::string());
  return os.str();
}

}  // namespace gxpo
