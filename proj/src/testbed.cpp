#include "gxpo/testbed.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "gxpo/rng.hpp"

namespace gxpo {

namespace {

using EigenVec = Eigen::VectorXd;

Eigen::Map<const EigenVec> as_eigen(const Vec& v) {
  return Eigen::Map<const EigenVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vec from_eigen(const EigenVec& v) {
  return Vec(v.data(), v.data() + v.size());
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

QuadraticObjective::QuadraticObjective(Matrix hessian, std::string spec)
    : hessian_(std::move(hessian)), spec_(std::move(spec)) {
  if (hessian_.rows() != hessian_.cols() || hessian_.rows() == 0) {
    throw std::invalid_argument("quadratic: hessian must be square and non-empty");
  }
  diagonal_ = true;
  for (Eigen::Index i = 0; i < hessian_.rows(); ++i) {
    for (Eigen::Index j = 0; j < hessian_.cols(); ++j) {
      if (std::abs(hessian_(i, j) - hessian_(j, i)) > 1e-12) {
        throw std::invalid_argument("quadratic: hessian must be symmetric");
      }
      if (i != j && hessian_(i, j) != 0.0) diagonal_ = false;
    }
  }
}

std::size_t QuadraticObjective::dimension() const {
  return static_cast<std::size_t>(hessian_.rows());
}

double QuadraticObjective::loss(const Vec& theta) const {
  const auto t = as_eigen(theta);
  return 0.5 * t.dot(hessian_ * t);
}

Vec QuadraticObjective::gradient(const Vec& theta) const {
  if (theta.size() != dimension()) {
    throw std::invalid_argument("quadratic: theta dimension mismatch");
  }
  return from_eigen(hessian_ * as_eigen(theta));
}

std::string QuadraticObjective::describe() const {
  if (!spec_.empty()) return spec_;
  return "quadratic d=" + std::to_string(dimension()) + " explicit=1";
}

CubicPerturbedObjective::CubicPerturbedObjective(QuadraticObjective base,
                                                 double cubic_coeff)
    : base_(std::move(base)), cubic_coeff_(cubic_coeff) {}

std::size_t CubicPerturbedObjective::dimension() const { return base_.dimension(); }

double CubicPerturbedObjective::loss(const Vec& theta) const {
  double cubic = 0.0;
  for (double x : theta) cubic += x * x * x;
  return base_.loss(theta) + cubic_coeff_ * cubic;
}

Vec CubicPerturbedObjective::gradient(const Vec& theta) const {
  Vec g = base_.gradient(theta);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] += 3.0 * cubic_coeff_ * theta[i] * theta[i];
  }
  return g;
}

Matrix CubicPerturbedObjective::hessian(const Vec& theta) const {
  Matrix h = base_.hessian_matrix();
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    h(i, i) += 6.0 * cubic_coeff_ * theta[static_cast<std::size_t>(i)];
  }
  return h;
}

std::string CubicPerturbedObjective::describe() const {
  return base_.describe() + " cubic=" + fmt_num(cubic_coeff_);
}

LogisticObjective::LogisticObjective(Matrix features, std::vector<int> labels,
                                     double l2, std::string spec)
    : features_(std::move(features)), labels_(std::move(labels)), l2_(l2),
      spec_(std::move(spec)) {
  if (static_cast<std::size_t>(features_.rows()) != labels_.size() ||
      features_.rows() == 0) {
    throw std::invalid_argument("logistic: feature/label size mismatch");
  }
  if (l2_ < 0.0) throw std::invalid_argument("logistic: l2 must be >= 0");
}

std::size_t LogisticObjective::dimension() const {
  return static_cast<std::size_t>(features_.cols());
}

namespace {
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}
}  // namespace

double LogisticObjective::loss(const Vec& theta) const {
  const EigenVec s = features_ * as_eigen(theta);
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    total += softplus(s[i]) - labels_[static_cast<std::size_t>(i)] * s[i];
  }
  const double n = static_cast<double>(s.size());
  return total / n + 0.5 * l2_ * as_eigen(theta).squaredNorm();
}

Vec LogisticObjective::gradient(const Vec& theta) const {
  if (theta.size() != dimension()) {
    throw std::invalid_argument("logistic: theta dimension mismatch");
  }
  const EigenVec s = features_ * as_eigen(theta);
  EigenVec resid(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-s[i]));
    resid[i] = p - labels_[static_cast<std::size_t>(i)];
  }
  const double n = static_cast<double>(s.size());
  EigenVec g = features_.transpose() * resid / n + l2_ * as_eigen(theta);
  return from_eigen(g);
}

std::string LogisticObjective::describe() const {
  if (!spec_.empty()) return spec_;
  return "logistic d=" + std::to_string(dimension()) + " explicit=1";
}

Vec LossScaleHook::gradient(const Vec& theta) const {
  Vec g = base_->gradient(theta);
  for (double& x : g) x *= scale_;
  return g;
}

Vec closed_form_gradient(const QuadraticObjective& q, const Vec& g0, double eta,
                         int n) {
  if (n < 0) throw std::invalid_argument("closed_form_gradient: n must be >= 0");
  if (g0.size() != q.dimension()) {
    throw std::invalid_argument("closed_form_gradient: dimension mismatch");
  }
  EigenVec v = as_eigen(g0);
  for (int k = 0; k < n; ++k) {
    v -= eta * (q.hessian_matrix() * v);
  }
  return from_eigen(v);
}

std::vector<GdPoint> gd_trajectory(const Objective& f, const Vec& theta0,
                                   double eta, int n) {
  if (n < 0) throw std::invalid_argument("gd_trajectory: n must be >= 0");
  std::vector<GdPoint> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  Vec theta = theta0;
  for (int k = 0; k <= n; ++k) {
    require_finite(theta, "gd_trajectory: non-finite iterate");
    Vec g = f.gradient(theta);
    out.push_back({theta, g});
    if (k < n) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta * g[i];
    }
  }
  return out;
}

QuadraticObjective make_random_quadratic(std::size_t dim, double eig_lo,
                                         double eig_hi, bool diagonal,
                                         std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("make_random_quadratic: dim must be > 0");
  if (!(eig_lo > 0.0) || !(eig_hi >= eig_lo)) {
    throw std::invalid_argument("make_random_quadratic: need 0 < eig_lo <= eig_hi");
  }
  Rng rng(seed);
  const Eigen::Index d = static_cast<Eigen::Index>(dim);
  EigenVec eigs(d);
  for (Eigen::Index i = 0; i < d; ++i) eigs[i] = rng.uniform(eig_lo, eig_hi);

  std::ostringstream spec;
  spec << "quadratic d=" << dim << " lo=" << fmt_num(eig_lo) << " hi="
       << fmt_num(eig_hi) << " diagonal=" << (diagonal ? 1 : 0) << " seed=" << seed;

  if (diagonal) {
    Matrix h = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) h(i, i) = eigs[i];
    return QuadraticObjective(std::move(h), spec.str());
  }

  Matrix gauss(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) gauss(i, j) = rng.normal();
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  Matrix h = q * eigs.asDiagonal() * q.transpose();
  h = 0.5 * (h + h.transpose().eval());  // exact symmetry
  return QuadraticObjective(std::move(h), spec.str());
}

LogisticObjective make_logistic(std::size_t dim, std::size_t samples, double l2,
                                std::uint64_t seed) {
  if (dim == 0 || samples == 0) {
    throw std::invalid_argument("make_logistic: dim and samples must be > 0");
  }
  Rng rng(seed);
  const Eigen::Index n = static_cast<Eigen::Index>(samples);
  const Eigen::Index d = static_cast<Eigen::Index>(dim);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  }
  EigenVec separator(d);
  for (Eigen::Index j = 0; j < d; ++j) separator[j] = rng.normal();
  separator *= 2.0 / std::sqrt(static_cast<double>(dim));

  std::vector<int> labels(samples);
  const EigenVec s = x * separator;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-s[i]));
    int y = rng.uniform() < p ? 1 : 0;
    if (rng.uniform() < 0.05) y = 1 - y;  // label noise
    labels[static_cast<std::size_t>(i)] = y;
  }

  std::ostringstream spec;
  spec << "logistic d=" << dim << " n=" << samples << " l2=" << fmt_num(l2)
       << " seed=" << seed;
  return LogisticObjective(std::move(x), std::move(labels), l2, spec.str());
}

Vec central_difference_gradient(const Objective& f, const Vec& theta,
                                double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("central_difference_gradient: step must be > 0");
  }
  Vec g(theta.size());
  Vec probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + step;
    const double hi = f.loss(probe);
    probe[i] = theta[i] - step;
    const double lo = f.loss(probe);
    probe[i] = theta[i];
    g[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

double spectral_norm_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  const auto& eigs = solver.eigenvalues();
  return std::max(std::abs(eigs.minCoeff()), std::abs(eigs.maxCoeff()));
}

double min_eigenvalue_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::unique_ptr<Objective> parse_objective_spec(const std::string& spec) {
  std::istringstream is(spec);
  std::string family;
  is >> family;
  if (family.empty()) throw std::invalid_argument("objective spec: empty");

  // key=value pairs
  std::string token;
  std::size_t dim = 0, samples = 0;
  double lo = 0, hi = 0, l2 = 0, cubic = 0;
  bool has_cubic = false;
  bool diagonal = false;
  std::uint64_t seed = 0;
  bool has_seed = false;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("objective spec: expected key=value, got '" +
                                  token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "d") dim = std::stoul(val);
    else if (key == "n") samples = std::stoul(val);
    else if (key == "lo") lo = std::stod(val);
    else if (key == "hi") hi = std::stod(val);
    else if (key == "l2") l2 = std::stod(val);
    else if (key == "cubic") { cubic = std::stod(val); has_cubic = true; }
    else if (key == "diagonal") diagonal = std::stoi(val) != 0;
    else if (key == "seed") { seed = std::stoull(val); has_seed = true; }
    else if (key == "explicit") {
      throw std::invalid_argument("objective spec: explicit objectives are not reconstructible");
    } else {
      throw std::invalid_argument("objective spec: unknown key '" + key + "'");
    }
  }

  if (family == "quadratic") {
    if (!has_seed) throw std::invalid_argument("objective spec: quadratic needs seed");
    auto q = make_random_quadratic(dim, lo, hi, diagonal, seed);
    if (has_cubic) {
      return std::make_unique<CubicPerturbedObjective>(std::move(q), cubic);
    }
    return std::make_unique<QuadraticObjective>(std::move(q));
  }
  if (family == "logistic") {
    if (!has_seed) throw std::invalid_argument("objective spec: logistic needs seed");
    return std::make_unique<LogisticObjective>(make_logistic(dim, samples, l2, seed));
  }
  throw std::invalid_argument("objective spec: unknown family '" + family + "'");
}

}  // namespace gxpo
