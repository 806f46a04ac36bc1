#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gxpo/objective.hpp"
#include "gxpo/vec.hpp"

namespace gxpo {

using Matrix = Eigen::MatrixXd;

// Objective with an analytic Hessian and a global bound on the third
// derivative tensor norm; the quadratic-family interface the error bounds
// evaluate against. The update rules themselves never touch it.
class SmoothObjective : public Objective {
 public:
  virtual Matrix hessian(const Vec& theta) const = 0;
  virtual double third_derivative_bound() const = 0;  // M3
};

// L(theta) = 1/2 theta' H theta with symmetric H. gradient = H theta exactly.
class QuadraticObjective final : public SmoothObjective {
 public:
  // H must be symmetric within 1e-12; when diagonal is claimed the
  // off-diagonal entries must be exactly zero.
  explicit QuadraticObjective(Matrix hessian, std::string spec = {});

  std::size_t dimension() const override;
  double loss(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Matrix hessian(const Vec&) const override { return hessian_; }
  double third_derivative_bound() const override { return 0.0; }

  const Matrix& hessian_matrix() const { return hessian_; }
  bool diagonal() const { return diagonal_; }

  // One-line plain-text description (family, dimension, generator seed and
  // coefficients where known) for run reproducibility.
  std::string describe() const;

 private:
  Matrix hessian_;
  bool diagonal_;
  std::string spec_;
};

// L(theta) = 1/2 theta' H theta + c * sum_i theta_i^3.
// gradient = H theta + 3c theta.^2; hessian(theta) = H + 6c diag(theta);
// the third-derivative tensor norm is exactly 6|c|.
class CubicPerturbedObjective final : public SmoothObjective {
 public:
  CubicPerturbedObjective(QuadraticObjective base, double cubic_coeff);

  std::size_t dimension() const override;
  double loss(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Matrix hessian(const Vec& theta) const override;
  double third_derivative_bound() const override { return 6.0 * std::abs(cubic_coeff_); }

  const QuadraticObjective& base() const { return base_; }
  double cubic_coeff() const { return cubic_coeff_; }
  std::string describe() const;

 private:
  QuadraticObjective base_;
  double cubic_coeff_;
};

// L2-regularized logistic negative log-likelihood over a fixed design
// matrix; smooth non-quadratic test loss.
class LogisticObjective final : public Objective {
 public:
  LogisticObjective(Matrix features, std::vector<int> labels, double l2,
                    std::string spec = {});

  std::size_t dimension() const override;
  double loss(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  std::string describe() const;

 private:
  Matrix features_;
  std::vector<int> labels_;
  double l2_;
  std::string spec_;
};

// Mutable loss-scale wrapper around an objective; lets a driver script a
// gradient-norm spike mid-run to exercise the shutoff gate.
class LossScaleHook final : public Objective {
 public:
  explicit LossScaleHook(const Objective& base) : base_(&base) {}

  std::size_t dimension() const override { return base_->dimension(); }
  double loss(const Vec& theta) const override { return scale_ * base_->loss(theta); }
  Vec gradient(const Vec& theta) const override;

  void set_scale(double s) { scale_ = s; }
  double scale() const { return scale_; }

 private:
  const Objective* base_;
  double scale_ = 1.0;
};

// (I - eta H)^n g0 via repeated matrix-vector products: the closed form of
// the gradient at the n-th plain-GD iterate under the local quadratic model.
Vec closed_form_gradient(const QuadraticObjective& q, const Vec& g0, double eta,
                         int n);

struct GdPoint {
  Vec theta;
  Vec grad;
};

// Plain gradient descent theta_{k+1} = theta_k - eta g_k for n steps.
// Returns the n+1 points theta_0 .. theta_n with their gradients; the
// brute-force reference all derived expectations are checked against.
std::vector<GdPoint> gd_trajectory(const Objective& f, const Vec& theta0,
                                   double eta, int n);

// Reproducible quadratic with spectrum inside [eig_lo, eig_hi]: eigenvalues
// drawn uniformly, conjugated by a random orthogonal matrix unless diagonal.
QuadraticObjective make_random_quadratic(std::size_t dim, double eig_lo,
                                         double eig_hi, bool diagonal,
                                         std::uint64_t seed);

// Ground-truth separator plus label noise, fixed seed.
LogisticObjective make_logistic(std::size_t dim, std::size_t samples,
                                double l2, std::uint64_t seed);

// Central differences with the given step; the independent gradient oracle.
Vec central_difference_gradient(const Objective& f, const Vec& theta,
                                double step);

// Spectral norm of a symmetric matrix (max |eigenvalue|), exact eigensolve.
double spectral_norm_sym(const Matrix& m);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue_sym(const Matrix& m);

// Parse a describe() line back into an objective.
std::unique_ptr<Objective> parse_objective_spec(const std::string& spec);

}  // namespace gxpo
