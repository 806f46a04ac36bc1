#pragma once

#include <cstddef>
#include <stdexcept>

#include "gxpo/objective.hpp"
#include "gxpo/vec.hpp"

namespace gxpo {

// Pass-counting view of an objective. Every update rule pulls gradients
// through one of these, so backward-pass budgets are audited identically for
// GRPO, SFPO and GXPO. gradient() increments pass_count by exactly one;
// loss() is a forward evaluation and is not counted.
class GradientOracle {
 public:
  explicit GradientOracle(const Objective& objective) : objective_(&objective) {}

  std::size_t dimension() const { return objective_->dimension(); }
  long pass_count() const { return pass_count_; }

  Vec gradient(const Vec& theta) {
    if (theta.size() != objective_->dimension()) {
      throw std::invalid_argument("oracle: theta dimension mismatch");
    }
    ++pass_count_;
    return objective_->gradient(theta);
  }

  double loss(const Vec& theta) const { return objective_->loss(theta); }

  const Objective& objective() const { return *objective_; }

 private:
  const Objective* objective_;
  long pass_count_ = 0;
};

// Total backward passes over `steps` outer steps when extrapolation shuts
// off at step `shutoff_step`: three passes per active step, one thereafter.
inline long total_passes(long steps, long shutoff_step) {
  if (shutoff_step < 0 || shutoff_step > steps) {
    throw std::invalid_argument("total_passes: shutoff step outside [0, steps]");
  }
  return 3 * shutoff_step + (steps - shutoff_step);
}

}  // namespace gxpo
