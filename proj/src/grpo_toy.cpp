#include "gxpo/grpo_toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "gxpo/oracle.hpp"
#include "gxpo/rng.hpp"

namespace gxpo {

void ToyTask::validate() const {
  if (questions == 0 || answers == 0 || correct.size() != questions) {
    throw std::invalid_argument("toy task: malformed");
  }
  for (std::size_t c : correct) {
    if (c >= answers) throw std::invalid_argument("toy task: correct index out of range");
  }
}

ToyTask make_easy_task(std::uint64_t seed) {
  ToyTask task;
  task.questions = 8;
  task.answers = 4;
  task.correct.resize(task.questions);
  Rng rng(seed);
  for (auto& c : task.correct) {
    c = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(task.answers)));
  }
  return task;
}

TabularPolicy TabularPolicy::uniform(std::size_t questions, std::size_t answers) {
  TabularPolicy p;
  p.questions = questions;
  p.answers = answers;
  p.logits.assign(questions * answers, 0.0);
  return p;
}

std::vector<double> softmax_row(const Vec& logits, std::size_t q, std::size_t v) {
  std::vector<double> p(v);
  const std::size_t base = q * v;
  double m = logits[base];
  for (std::size_t j = 1; j < v; ++j) m = std::max(m, logits[base + j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < v; ++j) {
    p[j] = std::exp(logits[base + j] - m);
    sum += p[j];
  }
  for (std::size_t j = 0; j < v; ++j) p[j] /= sum;
  return p;
}

namespace {

// log softmax stays finite even where probabilities underflow to zero, so
// p * log(p/ref) terms stay well defined (0 * finite) for saturated rows.
std::vector<double> log_softmax_row(const Vec& logits, std::size_t q, std::size_t v) {
  std::vector<double> lp(v);
  const std::size_t base = q * v;
  double m = logits[base];
  for (std::size_t j = 1; j < v; ++j) m = std::max(m, logits[base + j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < v; ++j) sum += std::exp(logits[base + j] - m);
  const double lse = m + std::log(sum);
  for (std::size_t j = 0; j < v; ++j) lp[j] = logits[base + j] - lse;
  return lp;
}

double kl_row(const std::vector<double>& p, const std::vector<double>& lp,
              const std::vector<double>& lref) {
  double kl = 0.0;
  for (std::size_t v = 0; v < p.size(); ++v) {
    if (p[v] > 0.0) kl += p[v] * (lp[v] - lref[v]);
  }
  return kl;
}

}  // namespace

std::vector<double> TabularPolicy::probs(std::size_t q) const {
  return softmax_row(logits, q, answers);
}

double RolloutBatch::mean_reward() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& x : samples) s += x.reward;
  return s / static_cast<double>(samples.size());
}

RolloutBatch sample_rollouts(const ToyTask& task, const TabularPolicy& policy,
                             std::size_t group_size, std::uint64_t seed) {
  task.validate();
  if (group_size < 2) {
    throw std::invalid_argument("sample_rollouts: group_size must be >= 2");
  }
  if (policy.questions != task.questions || policy.answers != task.answers) {
    throw std::invalid_argument("sample_rollouts: policy/task shape mismatch");
  }
  require_finite(policy.logits, "sample_rollouts: non-finite logits");

  RolloutBatch batch;
  batch.questions = task.questions;
  batch.answers = task.answers;
  batch.group_size = group_size;
  batch.samples.reserve(task.questions * group_size);

  Rng rng(seed);
  for (std::size_t q = 0; q < task.questions; ++q) {
    const std::vector<double> p = policy.probs(q);
    for (std::size_t g = 0; g < group_size; ++g) {
      const double u = rng.uniform();
      double cum = 0.0;
      std::size_t answer = task.answers - 1;
      for (std::size_t v = 0; v < task.answers; ++v) {
        cum += p[v];
        if (u < cum) {
          answer = v;
          break;
        }
      }
      batch.samples.push_back({answer, task.reward(q, answer), p[answer]});
    }
  }
  return batch;
}

Vec group_advantages(const Vec& rewards, double eps_a) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("group_advantages: need at least 2 rewards");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);
  const double sd = std::sqrt(var);
  Vec adv(g, 0.0);
  if (sd == 0.0) return adv;  // uninformative group carries no signal
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / (sd + eps_a);
  return adv;
}

GrpoLossObjective::GrpoLossObjective(RolloutBatch batch, Vec reference_logits,
                                     double clip_eps, double kl_beta,
                                     double eps_a)
    : batch_(std::move(batch)), reference_logits_(std::move(reference_logits)),
      clip_eps_(clip_eps), kl_beta_(kl_beta) {
  if (reference_logits_.size() != batch_.questions * batch_.answers) {
    throw std::invalid_argument("grpo loss: reference/batch dimension mismatch");
  }
  if (!(clip_eps_ > 0.0) || kl_beta_ < 0.0) {
    throw std::invalid_argument("grpo loss: bad clip_eps or kl_beta");
  }
  // Advantages are frozen here, alongside the rollouts and rewards.
  advantages_.resize(batch_.samples.size());
  Vec rewards(batch_.group_size);
  for (std::size_t q = 0; q < batch_.questions; ++q) {
    const std::size_t base = q * batch_.group_size;
    for (std::size_t g = 0; g < batch_.group_size; ++g) {
      rewards[g] = batch_.samples[base + g].reward;
    }
    const Vec adv = group_advantages(rewards, eps_a);
    for (std::size_t g = 0; g < batch_.group_size; ++g) {
      advantages_[base + g] = adv[g];
    }
  }
}

std::size_t GrpoLossObjective::dimension() const {
  return batch_.questions * batch_.answers;
}

double GrpoLossObjective::loss(const Vec& theta) const {
  if (theta.size() != dimension()) {
    throw std::invalid_argument("grpo loss: theta dimension mismatch");
  }
  const double n = static_cast<double>(batch_.samples.size());
  double surrogate = 0.0;
  double kl_total = 0.0;
  for (std::size_t q = 0; q < batch_.questions; ++q) {
    const std::vector<double> p = softmax_row(theta, q, batch_.answers);
    const std::size_t base = q * batch_.group_size;
    for (std::size_t g = 0; g < batch_.group_size; ++g) {
      const RolloutSample& s = batch_.samples[base + g];
      const double a = advantages_[base + g];
      if (a == 0.0) continue;
      const double rho = p[s.answer] / s.behavior_prob;
      const double clipped = std::clamp(rho, 1.0 - clip_eps_, 1.0 + clip_eps_);
      surrogate += std::min(rho * a, clipped * a);
    }
    if (kl_beta_ > 0.0) {
      const std::vector<double> lp = log_softmax_row(theta, q, batch_.answers);
      const std::vector<double> lref =
          log_softmax_row(reference_logits_, q, batch_.answers);
      kl_total += kl_row(p, lp, lref);
    }
  }
  return -surrogate / n + kl_beta_ * kl_total / static_cast<double>(batch_.questions);
}

Vec GrpoLossObjective::gradient(const Vec& theta) const {
  if (theta.size() != dimension()) {
    throw std::invalid_argument("grpo loss: theta dimension mismatch");
  }
  const double n = static_cast<double>(batch_.samples.size());
  Vec grad(theta.size(), 0.0);
  for (std::size_t q = 0; q < batch_.questions; ++q) {
    const std::vector<double> p = softmax_row(theta, q, batch_.answers);
    const std::size_t row = q * batch_.answers;
    const std::size_t base = q * batch_.group_size;
    for (std::size_t g = 0; g < batch_.group_size; ++g) {
      const RolloutSample& s = batch_.samples[base + g];
      const double a = advantages_[base + g];
      if (a == 0.0) continue;
      const double rho = p[s.answer] / s.behavior_prob;
      // min(rho*a, clip(rho)*a): the unclipped branch carries the gradient
      // unless the clipped value is strictly smaller and saturated.
      double dt_drho;
      const double clipped = std::clamp(rho, 1.0 - clip_eps_, 1.0 + clip_eps_);
      if (rho * a <= clipped * a) {
        dt_drho = a;
      } else {
        dt_drho = (rho >= 1.0 - clip_eps_ && rho <= 1.0 + clip_eps_) ? a : 0.0;
      }
      const double coef = -dt_drho * rho / n;
      for (std::size_t v = 0; v < batch_.answers; ++v) {
        const double indicator = v == s.answer ? 1.0 : 0.0;
        grad[row + v] += coef * (indicator - p[v]);
      }
    }
    if (kl_beta_ > 0.0) {
      const std::vector<double> lp = log_softmax_row(theta, q, batch_.answers);
      const std::vector<double> lref =
          log_softmax_row(reference_logits_, q, batch_.answers);
      const double kl = kl_row(p, lp, lref);
      const double w = kl_beta_ / static_cast<double>(batch_.questions);
      for (std::size_t v = 0; v < batch_.answers; ++v) {
        if (p[v] > 0.0) grad[row + v] += w * p[v] * (lp[v] - lref[v] - kl);
      }
    }
  }
  return grad;
}

GrpoLossObjective::EvalStats GrpoLossObjective::stats(const Vec& theta) const {
  EvalStats out;
  const double n = static_cast<double>(batch_.samples.size());
  double clipped_count = 0.0;
  double kl_total = 0.0;
  for (std::size_t q = 0; q < batch_.questions; ++q) {
    const std::vector<double> p = softmax_row(theta, q, batch_.answers);
    const std::size_t base = q * batch_.group_size;
    for (std::size_t g = 0; g < batch_.group_size; ++g) {
      const RolloutSample& s = batch_.samples[base + g];
      const double rho = p[s.answer] / s.behavior_prob;
      if (rho < 1.0 - clip_eps_ || rho > 1.0 + clip_eps_) clipped_count += 1.0;
    }
    const std::vector<double> lp = log_softmax_row(theta, q, batch_.answers);
    const std::vector<double> lref =
        log_softmax_row(reference_logits_, q, batch_.answers);
    kl_total += kl_row(p, lp, lref);
  }
  out.clip_fraction = clipped_count / n;
  out.kl_penalty = kl_beta_ * kl_total / static_cast<double>(batch_.questions);
  return out;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::Grpo: return "grpo";
    case Method::Sfpo: return "sfpo";
    case Method::Gxpo: return "gxpo";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "grpo") return Method::Grpo;
  if (name == "sfpo") return Method::Sfpo;
  if (name == "gxpo") return Method::Gxpo;
  return std::nullopt;
}

ToyTrainConfig default_toy_config() {
  ToyTrainConfig cfg;
  cfg.optimizer.kind = OptimizerKind::AdaptiveMoment;
  cfg.optimizer.learning_rate = 0.3;
  cfg.optimizer.grad_clip_norm = 1.0;
  cfg.gxpo.virtual_depth = 5;
  cfg.gxpo.alpha = 0.5;
  // The active threshold must sit above this task's gradient noise floor:
  // zero-variance groups leave KL-only coordinates around 1e-4, and ratios
  // formed there are meaningless and amplify geometrically.
  cfg.gxpo.delta = 1e-3;
  cfg.gxpo.tau = 2.0;
  cfg.sfpo.fast_steps = 5;
  cfg.sfpo.alpha = 0.5;
  cfg.sfpo.tau = 2.0;
  return cfg;
}

std::string curve_csv_header() {
  return "step,mean_reward,passes_cumulative,phase,clip_fraction,kl_penalty,z_score";
}

namespace {
std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string curve_csv_row(const CurvePoint& p) {
  std::ostringstream os;
  os << p.step << ',' << fmt_g(p.mean_reward) << ',' << p.passes_cumulative << ','
     << phase_name(p.phase) << ',' << fmt_g(p.clip_fraction) << ','
     << fmt_g(p.kl_penalty) << ',' << (p.z ? fmt_g(*p.z) : std::string());
  return os.str();
}

TrainResult train_toy(Method method, const ToyTrainConfig& cfg,
                      std::uint64_t seed) {
  cfg.task.validate();
  TrainResult result;
  result.policy = TabularPolicy::uniform(cfg.task.questions, cfg.task.answers);
  const Vec reference_logits = result.policy.logits;  // frozen initial policy

  Optimizer opt(cfg.optimizer, result.policy.logits.size());
  GxpoRuntime rt;
  long passes = 0;

  for (long step = 0; step < cfg.steps; ++step) {
    try {
      const RolloutBatch batch = sample_rollouts(
          cfg.task, result.policy, cfg.group_size, mix_seed(seed, static_cast<std::uint64_t>(step)));
      const double reward = batch.mean_reward();
      const GrpoLossObjective objective(batch, reference_logits, cfg.clip_eps,
                                        cfg.kl_beta, cfg.eps_a);
      const GrpoLossObjective::EvalStats stats = objective.stats(result.policy.logits);
      GradientOracle oracle(objective);

      StepResult sr;
      switch (method) {
        case Method::Grpo:
          sr = grpo_step(oracle, result.policy.logits, opt);
          sr.diag.step = step;
          break;
        case Method::Sfpo:
          sr = sfpo_step(oracle, result.policy.logits, opt, cfg.sfpo, rt);
          break;
        case Method::Gxpo:
          sr = gxpo_step(oracle, result.policy.logits, opt, cfg.gxpo, rt);
          break;
      }
      passes += oracle.pass_count();
      result.policy.logits = std::move(sr.theta);

      CurvePoint point;
      point.step = step;
      point.mean_reward = reward;
      point.passes_cumulative = passes;
      point.phase = sr.diag.phase;
      point.clip_fraction = stats.clip_fraction;
      point.kl_penalty = stats.kl_penalty;
      point.z = sr.diag.z;
      result.curve.push_back(point);
      result.diagnostics.push_back(sr.diag);
    } catch (const NonFiniteError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
  }

  result.total_passes = passes;
  result.shutoff_step = rt.shutoff_step;
  return result;
}

}  // namespace gxpo
