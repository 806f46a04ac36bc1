#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gxpo/baselines.hpp"
#include "gxpo/gxpo.hpp"
#include "gxpo/objective.hpp"
#include "gxpo/optimizer.hpp"
#include "gxpo/vec.hpp"

namespace gxpo {

// Bandit-style verifiable-reward task: Q independent questions, V candidate
// answers each, reward 1 for the correct answer and 0 otherwise.
struct ToyTask {
  std::size_t questions = 8;
  std::size_t answers = 4;
  std::vector<std::size_t> correct;  // size Q, entries < V

  double reward(std::size_t q, std::size_t a) const {
    return a == correct[q] ? 1.0 : 0.0;
  }
  void validate() const;
};

ToyTask make_easy_task(std::uint64_t seed = 7);

// Tabular softmax policy; the Q x V logit table is the flat parameter vector
// the update rules operate on (row-major, row q at [q*V, (q+1)*V)).
struct TabularPolicy {
  std::size_t questions = 0;
  std::size_t answers = 0;
  Vec logits;

  static TabularPolicy uniform(std::size_t questions, std::size_t answers);
  std::vector<double> probs(std::size_t q) const;  // softmax of row q
};

std::vector<double> softmax_row(const Vec& logits, std::size_t q, std::size_t v);

struct RolloutSample {
  std::size_t answer = 0;
  double reward = 0.0;
  double behavior_prob = 0.0;  // policy probability at sampling time
};

// G samples per question plus everything the loss needs to be re-evaluated
// without touching the environment again.
struct RolloutBatch {
  std::size_t questions = 0;
  std::size_t answers = 0;
  std::size_t group_size = 0;
  std::vector<RolloutSample> samples;  // questions * group_size, by question

  double mean_reward() const;
};

RolloutBatch sample_rollouts(const ToyTask& task, const TabularPolicy& policy,
                             std::size_t group_size, std::uint64_t seed);

// Group-relative advantages (r_i - mean) / (pop_std + eps_a). Zero-variance
// groups yield exactly zero advantages.
Vec group_advantages(const Vec& rewards, double eps_a);

// Frozen-batch GRPO loss: clipped importance-ratio surrogate over the stored
// rollouts plus an exact categorical KL penalty to a frozen reference policy.
//
//   L(theta) = -mean_s min(rho_s A_s, clip(rho_s, 1-eps, 1+eps) A_s)
//              + kl_beta * mean_q KL(pi_theta(.|q) || pi_ref(.|q))
//
// rho_s is the probability ratio against the recorded behavior probability.
// Rollouts, rewards and advantages are fixed at construction, so every
// gradient evaluation — including the probe and corrective passes of one
// outer step — sees the identical batch.
class GrpoLossObjective final : public Objective {
 public:
  GrpoLossObjective(RolloutBatch batch, Vec reference_logits, double clip_eps,
                    double kl_beta, double eps_a = 1e-8);

  std::size_t dimension() const override;
  double loss(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;

  struct EvalStats {
    double clip_fraction = 0.0;  // samples with rho outside the clip band
    double kl_penalty = 0.0;     // kl_beta * mean KL
  };
  // Forward-only diagnostics; not a backward pass.
  EvalStats stats(const Vec& theta) const;

  const RolloutBatch& batch() const { return batch_; }
  const Vec& advantages() const { return advantages_; }

 private:
  RolloutBatch batch_;
  Vec reference_logits_;
  double clip_eps_;
  double kl_beta_;
  Vec advantages_;
};

enum class Method { Grpo, Sfpo, Gxpo };

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct ToyTrainConfig {
  ToyTask task = make_easy_task();
  std::size_t group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 0.001;
  double eps_a = 1e-8;
  long steps = 80;
  OptimizerConfig optimizer;  // defaulted to the toy setup by default_toy_config()
  GxpoConfig gxpo;
  SfpoConfig sfpo;
};

// Adaptive-moment optimizer with gradient clipping at 1.0; gates at tau = 2.
ToyTrainConfig default_toy_config();

struct CurvePoint {
  long step = 0;
  double mean_reward = 0.0;
  long passes_cumulative = 0;
  Phase phase = Phase::Active;
  double clip_fraction = 0.0;
  double kl_penalty = 0.0;
  std::optional<double> z;
};

std::string curve_csv_header();
std::string curve_csv_row(const CurvePoint& p);

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::vector<StepDiagnostics> diagnostics;
  TabularPolicy policy;
  long total_passes = 0;
  std::optional<long> shutoff_step;
  bool aborted = false;
  std::string abort_reason;
};

// Outer loop: sample a fresh batch under the current policy, freeze it into
// a loss objective, apply one update (1, K+1 or 3 passes), log. Deterministic
// per seed. Divergence (non-finite logits) stops the run and reports why.
TrainResult train_toy(Method method, const ToyTrainConfig& cfg,
                      std::uint64_t seed);

}  // namespace gxpo
