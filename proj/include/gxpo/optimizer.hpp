#pragma once

#include <cstddef>

#include "gxpo/vec.hpp"

namespace gxpo {

enum class OptimizerKind { PlainGd, AdaptiveMoment };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::PlainGd;
  double learning_rate = 0.1;

  // Adaptive-moment parameters (ignored by plain-gd).
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled

  // When > 0, every gradient consumed by step() is rescaled to at most this
  // L2 norm before use. Off (0) in all verification suites.
  double grad_clip_norm = 0.0;

  void validate() const;
};

// Inner update rule shared by all outer steps. step() performs no gradient
// evaluation.
//
// plain-gd:            theta' = theta - lr * g                (stateless)
//
// adaptive-moment (decoupled weight decay, bias-corrected):
//   t     <- t + 1
//   m     <- beta1 * m + (1 - beta1) * g
//   v     <- beta2 * v + (1 - beta2) * g^2
//   m_hat  = m / (1 - beta1^t)
//   v_hat  = v / (1 - beta2^t)
//   theta' = theta - lr * ( m_hat / (sqrt(v_hat) + epsilon)
//                           + weight_decay * theta )
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t dim);

  Vec step(const Vec& theta, const Vec& grad);

  // Full mutable state, used by the reposition-ablation flag in GxpoConfig.
  struct Snapshot {
    Vec m, v;
    long t = 0;
    double beta1_pow = 1.0;
    double beta2_pow = 1.0;
  };
  Snapshot snapshot() const;
  void restore(const Snapshot& s);

  void reset();
  const OptimizerConfig& config() const { return config_; }
  std::size_t dimension() const { return dim_; }
  long step_count() const { return t_; }

 private:
  OptimizerConfig config_;
  std::size_t dim_;
  Vec m_, v_;
  long t_ = 0;
  double beta1_pow_ = 1.0;
  double beta2_pow_ = 1.0;
};

}  // namespace gxpo
