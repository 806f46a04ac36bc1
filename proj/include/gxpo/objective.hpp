#pragma once

#include <cstddef>

#include "gxpo/vec.hpp"

namespace gxpo {

// A differentiable objective. Implementations are deterministic and
// immutable after construction: the same theta always produces the same
// loss and the same gradient bit pattern. Per-run pass accounting lives in
// GradientOracle, not here, so one objective can back many runs.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const = 0;
  virtual double loss(const Vec& theta) const = 0;
  virtual Vec gradient(const Vec& theta) const = 0;
};

}  // namespace gxpo
