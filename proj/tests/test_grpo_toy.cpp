#include <doctest.h>

#include <cmath>
#include <limits>

#include "gxpo/grpo_toy.hpp"
#include "gxpo/oracle.hpp"
#include "gxpo/rng.hpp"
#include "gxpo/testbed.hpp"

using namespace gxpo;

TEST_SUITE("grpo_toy") {

TEST_CASE("sampling is deterministic per seed") {
  const ToyTask task = make_easy_task(7);
  const TabularPolicy policy = TabularPolicy::uniform(task.questions, task.answers);
  const RolloutBatch a = sample_rollouts(task, policy, 8, 42);
  const RolloutBatch b = sample_rollouts(task, policy, 8, 42);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].answer == b.samples[i].answer);
    CHECK(a.samples[i].reward == b.samples[i].reward);
    CHECK(a.samples[i].behavior_prob == b.samples[i].behavior_prob);
  }
  const RolloutBatch c = sample_rollouts(task, policy, 8, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    any_diff = any_diff || a.samples[i].answer != c.samples[i].answer;
  }
  CHECK(any_diff);
}

TEST_CASE("a near-deterministic correct policy earns full reward") {
  const ToyTask task = make_easy_task(7);
  TabularPolicy policy = TabularPolicy::uniform(task.questions, task.answers);
  for (std::size_t q = 0; q < task.questions; ++q) {
    policy.logits[q * task.answers + task.correct[q]] = 50.0;
  }
  const RolloutBatch batch = sample_rollouts(task, policy, 16, 5);
  CHECK(batch.mean_reward() == 1.0);
}

TEST_CASE("a uniform policy on V=4 answers about a quarter correctly") {
  const ToyTask task = make_easy_task(7);
  const TabularPolicy policy = TabularPolicy::uniform(task.questions, task.answers);
  const RolloutBatch batch = sample_rollouts(task, policy, 1000, 321);
  CHECK(std::abs(batch.mean_reward() - 0.25) <= 0.05);
}

TEST_CASE("group advantages: zero variance, hand example, centering") {
  CHECK(group_advantages({1.0, 1.0, 1.0}, 1e-8) == Vec{0.0, 0.0, 0.0});

  const Vec adv = group_advantages({1.0, 0.0, 0.0, 0.0, 1.0}, 0.0);
  CHECK(adv[0] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(adv[1] == doctest::Approx(-0.8165).epsilon(1e-4));
  CHECK(adv[4] == doctest::Approx(adv[0]).epsilon(1e-12));

  Rng rng(5);
  Vec rewards(8);
  for (auto& r : rewards) r = rng.uniform() < 0.4 ? 1.0 : 0.0;
  const Vec a = group_advantages(rewards, 1e-8);
  double sum = 0.0;
  for (double x : a) sum += x;
  CHECK(std::abs(sum) <= 1e-12);

  CHECK_THROWS_AS(group_advantages({1.0}, 1e-8), std::invalid_argument);
}

TEST_CASE("loss and gradient vanish at theta_old with uninformative groups") {
  const ToyTask task{2, 3, {0, 1}};
  TabularPolicy policy = TabularPolicy::uniform(2, 3);
  RolloutBatch batch;
  batch.questions = 2;
  batch.answers = 3;
  batch.group_size = 2;
  // all rewards equal within each group -> zero advantages everywhere
  batch.samples = {{0, 1.0, 1.0 / 3}, {0, 1.0, 1.0 / 3}, {2, 0.0, 1.0 / 3}, {2, 0.0, 1.0 / 3}};
  const GrpoLossObjective f(batch, policy.logits, 0.2, 0.001);
  CHECK(f.loss(policy.logits) == 0.0);  // surrogate zero, KL to itself zero
  const Vec g = f.gradient(policy.logits);
  for (double x : g) CHECK(x == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.stats(policy.logits).clip_fraction == 0.0);
}

TEST_CASE("clip fraction is zero at the behavior policy and grows off it") {
  const ToyTask task = make_easy_task(11);
  TabularPolicy policy = TabularPolicy::uniform(task.questions, task.answers);
  const RolloutBatch batch = sample_rollouts(task, policy, 8, 77);
  const GrpoLossObjective f(batch, policy.logits, 0.2, 0.001);
  CHECK(f.stats(policy.logits).clip_fraction == 0.0);

  Vec far = policy.logits;
  Rng rng(3);
  for (auto& x : far) x += rng.normal();  // large policy shift
  CHECK(f.stats(far).clip_fraction > 0.0);
}

TEST_CASE("analytic gradient matches central differences") {
  const ToyTask task = make_easy_task(13);
  TabularPolicy policy = TabularPolicy::uniform(task.questions, task.answers);
  Rng rng(29);
  for (auto& x : policy.logits) x += 0.7 * rng.normal();
  const RolloutBatch batch = sample_rollouts(task, policy, 6, 1001);
  const GrpoLossObjective f(batch, Vec(policy.logits.size(), 0.0), 0.2, 0.001);

  for (int p = 0; p < 10; ++p) {
    Vec theta = policy.logits;
    for (auto& x : theta) x += 0.3 * rng.normal();
    const Vec analytic = f.gradient(theta);
    const Vec numeric = central_difference_gradient(f, theta, 1e-6);
    const double err = norm2(sub(analytic, numeric)) / std::max(norm2(analytic), 1e-12);
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("frozen batch: probe evaluations see identical data") {
  const ToyTask task = make_easy_task(7);
  TabularPolicy policy = TabularPolicy::uniform(task.questions, task.answers);
  const RolloutBatch batch = sample_rollouts(task, policy, 8, 55);
  const GrpoLossObjective f(batch, policy.logits, 0.2, 0.001);
  GradientOracle oracle(f);

  const Vec adv_before = f.advantages();
  const auto samples_before = f.batch().samples;

  Optimizer opt({OptimizerKind::PlainGd, 0.5}, policy.logits.size());
  GxpoConfig cfg;
  cfg.virtual_depth = 5;
  cfg.tau = std::numeric_limits<double>::infinity();
  GxpoRuntime rt;
  gxpo_step(oracle, policy.logits, opt, cfg, rt);
  CHECK(oracle.pass_count() == 3);

  CHECK(f.advantages() == adv_before);
  REQUIRE(f.batch().samples.size() == samples_before.size());
  for (std::size_t i = 0; i < samples_before.size(); ++i) {
    CHECK(f.batch().samples[i].answer == samples_before[i].answer);
    CHECK(f.batch().samples[i].reward == samples_before[i].reward);
    CHECK(f.batch().samples[i].behavior_prob == samples_before[i].behavior_prob);
  }
  // determinism across evaluations at the same point
  const Vec g1 = f.gradient(policy.logits);
  const Vec g2 = f.gradient(policy.logits);
  CHECK(g1 == g2);
}

TEST_CASE("softmax rows always sum to one") {
  Rng rng(41);
  TabularPolicy policy = TabularPolicy::uniform(6, 5);
  for (auto& x : policy.logits) x = 3.0 * rng.normal();
  for (std::size_t q = 0; q < 6; ++q) {
    const auto p = policy.probs(q);
    double sum = 0.0;
    for (double x : p) sum += x;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("trained policies keep valid softmax rows") {
  ToyTrainConfig cfg = default_toy_config();
  cfg.steps = 30;
  const TrainResult tr = train_toy(Method::Gxpo, cfg, 2);
  CHECK(!tr.aborted);
  for (std::size_t q = 0; q < cfg.task.questions; ++q) {
    const auto p = tr.policy.probs(q);
    double sum = 0.0;
    for (double x : p) sum += x;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("training is bit-deterministic per seed") {
  ToyTrainConfig cfg = default_toy_config();
  cfg.steps = 25;
  const TrainResult a = train_toy(Method::Gxpo, cfg, 9);
  const TrainResult b = train_toy(Method::Gxpo, cfg, 9);
  CHECK(a.policy.logits == b.policy.logits);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].mean_reward == b.curve[i].mean_reward);
    CHECK(a.curve[i].passes_cumulative == b.curve[i].passes_cumulative);
  }
}

TEST_CASE("per-method pass counting contracts") {
  ToyTrainConfig cfg = default_toy_config();
  cfg.steps = 10;
  cfg.gxpo.tau = std::numeric_limits<double>::infinity();
  cfg.sfpo.tau = std::numeric_limits<double>::infinity();

  const TrainResult grpo = train_toy(Method::Grpo, cfg, 1);
  CHECK(grpo.total_passes == 10);

  const TrainResult gxpo_run = train_toy(Method::Gxpo, cfg, 1);
  CHECK(gxpo_run.total_passes == 30);
  for (const auto& d : gxpo_run.diagnostics) CHECK(d.passes == 3);

  cfg.sfpo.fast_steps = 5;
  const TrainResult sfpo_run = train_toy(Method::Sfpo, cfg, 1);
  CHECK(sfpo_run.total_passes == (5 + 1) * 10);
}

TEST_CASE("gxpo active-phase cost is three passes for any K") {
  for (int k : {3, 5, 10}) {
    ToyTrainConfig cfg = default_toy_config();
    cfg.steps = 4;
    cfg.gxpo.virtual_depth = k;
    cfg.gxpo.tau = std::numeric_limits<double>::infinity();
    const TrainResult tr = train_toy(Method::Gxpo, cfg, 3);
    for (const auto& d : tr.diagnostics) {
      CHECK(d.phase == Phase::Active);
      CHECK(d.passes == 3);
    }
  }
}

TEST_CASE("divergent training aborts with a reason instead of crashing") {
  ToyTrainConfig cfg = default_toy_config();
  // lr * weight_decay >> 2 makes the decay term expansive: |theta| grows by
  // ~99x per step until the logits overflow
  cfg.optimizer.kind = OptimizerKind::AdaptiveMoment;
  cfg.optimizer.learning_rate = 10.0;
  cfg.optimizer.weight_decay = 10.0;
  cfg.optimizer.grad_clip_norm = 0.0;
  cfg.steps = 400;
  const TrainResult tr = train_toy(Method::Grpo, cfg, 1);
  CHECK(tr.aborted);
  CHECK(!tr.abort_reason.empty());
  CHECK(tr.curve.size() < 400);
}

TEST_CASE("rollout batch and loss validate their shapes") {
  const ToyTask task = make_easy_task(7);
  const TabularPolicy policy = TabularPolicy::uniform(task.questions, task.answers);
  CHECK_THROWS_AS(sample_rollouts(task, policy, 1, 1), std::invalid_argument);

  const RolloutBatch batch = sample_rollouts(task, policy, 4, 1);
  CHECK_THROWS_AS(GrpoLossObjective(batch, Vec(3, 0.0), 0.2, 0.001),
                  std::invalid_argument);
  const GrpoLossObjective f(batch, policy.logits, 0.2, 0.001);
  CHECK_THROWS_AS(f.loss(Vec(3, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(f.gradient(Vec(3, 0.0)), std::invalid_argument);
}

}  // TEST_SUITE
