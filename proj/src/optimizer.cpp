#include "gxpo/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace gxpo {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("optimizer: learning_rate must be positive and finite");
  }
  if (grad_clip_norm < 0.0) {
    throw std::invalid_argument("optimizer: grad_clip_norm must be >= 0");
  }
  if (kind == OptimizerKind::AdaptiveMoment) {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
      throw std::invalid_argument("optimizer: betas must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) {
      throw std::invalid_argument("optimizer: epsilon must be positive");
    }
    if (weight_decay < 0.0) {
      throw std::invalid_argument("optimizer: weight_decay must be >= 0");
    }
  }
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t dim)
    : config_(config), dim_(dim) {
  config_.validate();
  if (config_.kind == OptimizerKind::AdaptiveMoment) {
    m_.assign(dim_, 0.0);
    v_.assign(dim_, 0.0);
  }
}

Vec Optimizer::step(const Vec& theta, const Vec& grad) {
  if (theta.size() != dim_ || grad.size() != dim_) {
    throw std::invalid_argument("optimizer: dimension mismatch");
  }
  require_finite(grad, "optimizer: non-finite gradient");

  double scale = 1.0;
  if (config_.grad_clip_norm > 0.0) {
    const double n = norm2(grad);
    if (n > config_.grad_clip_norm) scale = config_.grad_clip_norm / n;
  }

  Vec out(dim_);
  if (config_.kind == OptimizerKind::PlainGd) {
    for (std::size_t i = 0; i < dim_; ++i) {
      out[i] = theta[i] - config_.learning_rate * (scale * grad[i]);
    }
    return out;
  }

  ++t_;
  beta1_pow_ *= config_.beta1;
  beta2_pow_ *= config_.beta2;
  const double bc1 = 1.0 - beta1_pow_;
  const double bc2 = 1.0 - beta2_pow_;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double g = scale * grad[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    out[i] = theta[i] - config_.learning_rate *
                            (m_hat / (std::sqrt(v_hat) + config_.epsilon) +
                             config_.weight_decay * theta[i]);
  }
  return out;
}

Optimizer::Snapshot Optimizer::snapshot() const {
  return Snapshot{m_, v_, t_, beta1_pow_, beta2_pow_};
}

void Optimizer::restore(const Snapshot& s) {
  m_ = s.m;
  v_ = s.v;
  t_ = s.t;
  beta1_pow_ = s.beta1_pow;
  beta2_pow_ = s.beta2_pow;
}

void Optimizer::reset() {
  if (config_.kind == OptimizerKind::AdaptiveMoment) {
    m_.assign(dim_, 0.0);
    v_.assign(dim_, 0.0);
  }
  t_ = 0;
  beta1_pow_ = 1.0;
  beta2_pow_ = 1.0;
}

}  // namespace gxpo
