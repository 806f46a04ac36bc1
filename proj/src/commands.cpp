#include "gxpo/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include "gxpo/baselines.hpp"
#include "gxpo/gxpo.hpp"
#include "gxpo/oracle.hpp"
#include "gxpo/rng.hpp"
#include "gxpo/suites.hpp"
#include "gxpo/testbed.hpp"

namespace gxpo {

namespace fs = std::filesystem;

namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Synthetic-loss training loop: same method dispatch as the toy loop but on
// a fixed objective, logging the loss before each update.
struct QuadCurvePoint {
  long step = 0;
  double loss = 0.0;
  long passes_cumulative = 0;
  Phase phase = Phase::Active;
  std::optional<double> z;
};

struct QuadRunResult {
  std::vector<QuadCurvePoint> curve;
  std::vector<StepDiagnostics> diagnostics;
  bool aborted = false;
  std::string abort_reason;
};

QuadRunResult run_quadratic(const RunConfig& cfg, std::uint64_t seed) {
  const std::unique_ptr<Objective> objective = parse_objective_spec(cfg.objective_spec);
  GradientOracle oracle(*objective);
  Optimizer opt(cfg.optimizer, objective->dimension());
  GxpoRuntime rt;
  Rng rng(mix_seed(cfg.theta0_seed, seed));
  Vec theta(objective->dimension());
  for (auto& x : theta) x = cfg.theta0_scale * rng.normal();

  QuadRunResult result;
  long passes = 0;
  for (long step = 0; step < cfg.steps; ++step) {
    try {
      const double loss = oracle.loss(theta);
      StepResult sr;
      switch (cfg.method) {
        case Method::Grpo:
          sr = grpo_step(oracle, theta, opt);
          sr.diag.step = step;
          break;
        case Method::Sfpo:
          sr = sfpo_step(oracle, theta, opt, cfg.sfpo, rt);
          break;
        case Method::Gxpo:
          sr = gxpo_step(oracle, theta, opt, cfg.gxpo, rt);
          break;
      }
      passes += sr.diag.passes;
      theta = std::move(sr.theta);
      result.curve.push_back({step, loss, passes, sr.diag.phase, sr.diag.z});
      result.diagnostics.push_back(sr.diag);
    } catch (const NonFiniteError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
  }
  return result;
}

void write_diag_csv(const fs::path& path, const std::vector<StepDiagnostics>& diags) {
  std::ofstream out = open_csv(path);
  out << diagnostics_csv_header() << '\n';
  for (const auto& d : diags) out << diagnostics_csv_row(d) << '\n';
}

int train_toy_task(const RunConfig& cfg, const fs::path& out_dir,
                   std::vector<std::vector<CurvePoint>>* curves_out) {
  const ToyTrainConfig tcfg = cfg.toy_train_config();
  bool any_aborted = false;
  std::vector<std::vector<CurvePoint>> curves;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainResult tr = train_toy(cfg.method, tcfg, seed);
    std::ofstream out = open_csv(out_dir / ("curve_seed" + std::to_string(seed) + ".csv"));
    out << curve_csv_header() << '\n';
    for (const auto& p : tr.curve) out << curve_csv_row(p) << '\n';
    write_diag_csv(out_dir / ("diagnostics_seed" + std::to_string(seed) + ".csv"),
                   tr.diagnostics);
    if (tr.aborted) {
      any_aborted = true;
      std::cerr << "run aborted (seed " << seed << "): " << tr.abort_reason
                << "; partial curve written\n";
    }
    curves.push_back(tr.curve);
  }

  // Aggregate across seeds.
  std::size_t max_len = 0;
  for (const auto& c : curves) max_len = std::max(max_len, c.size());
  std::ofstream agg = open_csv(out_dir / "aggregate.csv");
  agg << "step,mean_reward_avg,mean_reward_min,mean_reward_max,"
         "passes_cumulative_avg\n";
  for (std::size_t s = 0; s < max_len; ++s) {
    double sum = 0.0, mn = std::numeric_limits<double>::infinity(), mx = -mn;
    double psum = 0.0;
    std::size_t n = 0;
    for (const auto& c : curves) {
      if (s >= c.size()) continue;
      sum += c[s].mean_reward;
      mn = std::min(mn, c[s].mean_reward);
      mx = std::max(mx, c[s].mean_reward);
      psum += static_cast<double>(c[s].passes_cumulative);
      ++n;
    }
    if (n == 0) continue;
    agg << s << ',' << fmt_g(sum / static_cast<double>(n)) << ',' << fmt_g(mn)
        << ',' << fmt_g(mx) << ',' << fmt_g(psum / static_cast<double>(n)) << '\n';
  }
  if (curves_out) *curves_out = std::move(curves);
  return any_aborted ? 1 : 0;
}

int train_quadratic_task(const RunConfig& cfg, const fs::path& out_dir) {
  bool any_aborted = false;
  std::vector<std::vector<QuadCurvePoint>> curves;
  for (std::uint64_t seed : cfg.seeds) {
    const QuadRunResult r = run_quadratic(cfg, seed);
    std::ofstream out = open_csv(out_dir / ("curve_seed" + std::to_string(seed) + ".csv"));
    out << "step,loss,passes_cumulative,phase,z_score\n";
    for (const auto& p : r.curve) {
      out << p.step << ',' << fmt_g(p.loss) << ',' << p.passes_cumulative << ','
          << phase_name(p.phase) << ',' << (p.z ? fmt_g(*p.z) : std::string())
          << '\n';
    }
    write_diag_csv(out_dir / ("diagnostics_seed" + std::to_string(seed) + ".csv"),
                   r.diagnostics);
    if (r.aborted) {
      any_aborted = true;
      std::cerr << "run aborted (seed " << seed << "): " << r.abort_reason
                << "; partial curve written\n";
    }
    curves.push_back(r.curve);
  }

  std::size_t max_len = 0;
  for (const auto& c : curves) max_len = std::max(max_len, c.size());
  std::ofstream agg = open_csv(out_dir / "aggregate.csv");
  agg << "step,loss_avg,loss_min,loss_max,passes_cumulative_avg\n";
  for (std::size_t s = 0; s < max_len; ++s) {
    double sum = 0.0, mn = std::numeric_limits<double>::infinity(), mx = -mn;
    double psum = 0.0;
    std::size_t n = 0;
    for (const auto& c : curves) {
      if (s >= c.size()) continue;
      sum += c[s].loss;
      mn = std::min(mn, c[s].loss);
      mx = std::max(mx, c[s].loss);
      psum += static_cast<double>(c[s].passes_cumulative);
      ++n;
    }
    if (n == 0) continue;
    agg << s << ',' << fmt_g(sum / static_cast<double>(n)) << ',' << fmt_g(mn)
        << ',' << fmt_g(mx) << ',' << fmt_g(psum / static_cast<double>(n)) << '\n';
  }
  return any_aborted ? 1 : 0;
}

}  // namespace

int cmd_verify(const std::string& suite, const std::string& out_dir) {
  std::vector<std::string> to_run;
  if (suite == "all") {
    to_run = suite_names();
  } else if (find_suite(suite)) {
    to_run.push_back(suite);
  } else {
    std::cerr << "unknown suite '" << suite << "'; expected one of:";
    for (const auto& n : suite_names()) std::cerr << ' ' << n;
    std::cerr << " all\n";
    return 2;
  }

  fs::create_directories(out_dir);
  bool all_pass = true;
  for (const auto& name : to_run) {
    const fs::path csv_path = fs::path(out_dir) / (name + ".csv");
    std::ofstream csv = open_csv(csv_path);
    const SuiteResult res = (*find_suite(name))(&csv);
    all_pass = all_pass && res.pass();
    std::cout << "suite " << res.suite << ": " << (res.pass() ? "PASS" : "FAIL")
              << " (" << res.instances << " instances, " << res.failures
              << " failures) " << res.detail << " -> " << csv_path.string()
              << '\n';
  }
  return all_pass ? 0 : 1;
}

int cmd_train(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  if (cfg.task == "toy") return train_toy_task(cfg, cfg.out_dir, nullptr);
  return train_quadratic_task(cfg, cfg.out_dir);
}

int cmd_sweep(const RunConfig& cfg) {
  if (cfg.sweep_alpha.empty() || cfg.sweep_k.empty()) {
    std::cerr << "sweep requires sweep_alpha and sweep_k lists in the config\n";
    return 2;
  }
  fs::create_directories(cfg.out_dir);
  int status = 0;
  for (double alpha : cfg.sweep_alpha) {
    for (int k : cfg.sweep_k) {
      RunConfig combo = cfg;
      combo.gxpo.alpha = alpha;
      combo.sfpo.alpha = alpha;
      combo.gxpo.virtual_depth = k;
      combo.sfpo.fast_steps = k;
      const std::string tag = "alpha" + fmt_short(alpha) + "_k" + std::to_string(k);
      combo.out_dir = (fs::path(cfg.out_dir) / tag).string();
      const int rc = cmd_train(combo);
      status = std::max(status, rc);
      fs::copy_file(fs::path(combo.out_dir) / "aggregate.csv",
                    fs::path(cfg.out_dir) / ("curve_" + tag + ".csv"),
                    fs::copy_options::overwrite_existing);
    }
  }
  return status;
}

}  // namespace gxpo
