#include "dictdescent/space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dictdescent/errors.hpp"

namespace dictdescent {

Space::Space(std::vector<double> weights, double q) : weights_(std::move(weights)), q_(q) {
  if (!(q_ > 1.0) || !std::isfinite(q_))
    throw ParameterError("space exponent q must be finite and > 1, got " + std::to_string(q_));
  if (weights_.empty()) throw ParameterError("space dimension must be positive");
  for (double w : weights_)
    if (!(w > 0.0) || !std::isfinite(w))
      throw ParameterError("space weights must be finite and strictly positive");
}

std::shared_ptr<const Space> Space::create(std::vector<double> weights, double q) {
  return std::make_shared<const Space>(std::move(weights), q);
}

std::shared_ptr<const Space> Space::uniform(std::size_t n, double q, double h) {
  return create(std::vector<double>(n, h), q);
}

bool Space::compatible(const Space& other) const {
  return this == &other || (q_ == other.q_ && weights_ == other.weights_);
}

SpaceVector::SpaceVector(SpacePtr space, std::vector<double> coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (!space_) throw ParameterError("vector without a space");
  if (coeffs_.size() != space_->dim())
    throw DimensionMismatch("coefficient length " + std::to_string(coeffs_.size()) +
                            " does not match space dimension " +
                            std::to_string(space_->dim()));
}

SpaceVector SpaceVector::zeros(SpacePtr space) {
  const auto n = space->dim();
  return SpaceVector(std::move(space), std::vector<double>(n, 0.0));
}

SpaceVector SpaceVector::basis(SpacePtr space, std::size_t i) {
  std::vector<double> c(space->dim(), 0.0);
  c.at(i) = 1.0;
  return SpaceVector(std::move(space), std::move(c));
}

SpaceVector SpaceVector::with_coeffs(std::vector<double> coeffs) const {
  return SpaceVector(space_, std::move(coeffs));
}

SpaceVector SpaceVector::axpy(double a, const SpaceVector& x) const {
  require_compatible(*this, x);
  std::vector<double> c(coeffs_);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += a * x.coeffs_[i];
  return SpaceVector(space_, std::move(c));
}

bool SpaceVector::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double x) { return std::isfinite(x); });
}

SpaceVector operator+(const SpaceVector& a, const SpaceVector& b) { return a.axpy(1.0, b); }
SpaceVector operator-(const SpaceVector& a, const SpaceVector& b) { return a.axpy(-1.0, b); }

SpaceVector operator-(const SpaceVector& a) { return -1.0 * a; }

SpaceVector operator*(double t, const SpaceVector& a) {
  std::vector<double> c(a.coeffs_);
  for (auto& x : c) x *= t;
  return SpaceVector(a.space_, std::move(c));
}

void require_compatible(const SpaceVector& a, const SpaceVector& b) {
  if (a.size() != b.size())
    throw DimensionMismatch("vectors of length " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()) + " cannot be combined");
  if (!a.space().compatible(b.space()))
    throw DimensionMismatch("vectors live in spaces with different weights or exponent");
}

namespace lq {

double norm(std::span<const double> x, std::span<const double> w, double q) {
  double scale = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidInput("non-finite coefficient");
    scale = std::max(scale, std::abs(v));
  }
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::pow(std::abs(x[i]) / scale, q);
  return scale * std::pow(acc, 1.0 / q);
}

std::vector<double> maximizer(std::span<const double> f, std::span<const double> w, double q) {
  const double qd = q / (q - 1.0);
  const double fn = norm(f, w, qd);
  if (fn == 0.0) throw UndefinedDirection("dual maximizer of the zero functional");
  std::vector<double> u(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = std::abs(f[i]) / fn;
    u[i] = (f[i] < 0.0 ? -1.0 : 1.0) * std::pow(r, qd - 1.0);
  }
  return u;
}

}  // namespace lq

double norm(const SpaceVector& v) {
  return lq::norm(v.coeffs(), v.space().weights(), v.space().q());
}

double pair(const SpaceVector& f, const SpaceVector& v) {
  require_compatible(f, v);
  const auto w = f.space().weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * f[i] * v[i];
  return acc;
}

double dual_norm(const SpaceVector& f) {
  return lq::norm(f.coeffs(), f.space().weights(), f.space().conjugate());
}

SpaceVector dual_maximizer(const SpaceVector& f) {
  return f.with_coeffs(lq::maximizer(f.coeffs(), f.space().weights(), f.space().q()));
}

}  // namespace dictdescent
