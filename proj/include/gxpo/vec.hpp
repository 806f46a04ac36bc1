#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gxpo {

// Dense parameter/gradient vector. All update rules operate coordinate-wise
// on this type; dimension is fixed for the lifetime of a run.
using Vec = std::vector<double>;

// Thrown when a public operation would produce or consume a non-finite
// coordinate. Carries the first offending index.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::size_t coordinate)
      : std::runtime_error(what + " (coordinate " + std::to_string(coordinate) + ")"),
        coordinate_(coordinate) {}

  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

inline double norm1(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double norm_inf(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// a*x + y
inline Vec axpy(double a, const Vec& x, const Vec& y) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// Cosine of the angle between two vectors, clamped to [-1, 1].
// Zero vectors yield 0.
inline double cosine(const Vec& a, const Vec& b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot(a, b) / (na * nb);
  return std::max(-1.0, std::min(1.0, c));
}

// |a - b| relative to the largest magnitude among a, b and scale_floor.
// The floor keeps comparisons meaningful for coordinates that have
// contracted far below their starting scale, where the representable
// precision is set by the operands of the update, not the result.
inline double rel_err(double a, double b, double scale_floor = 0.0) {
  const double denom =
      std::max({std::abs(a), std::abs(b), std::abs(scale_floor)});
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

inline void require_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

inline void require_finite(const Vec& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw NonFiniteError(what, i);
  }
}

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace gxpo
