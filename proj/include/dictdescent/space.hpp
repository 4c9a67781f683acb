#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace dictdescent {

// Weighted sequence space: coefficients paired against positive quadrature
// weights, normed by (sum w_i |x_i|^q)^(1/q).
class Space {
 public:
  Space(std::vector<double> weights, double q);

  static std::shared_ptr<const Space> create(std::vector<double> weights, double q);
  // n equal weights of size h (h = 1 gives plain l^q)
  static std::shared_ptr<const Space> uniform(std::size_t n, double q, double h = 1.0);

  std::size_t dim() const { return weights_.size(); }
  double q() const { return q_; }
  double conjugate() const { return q_ / (q_ - 1.0); }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

  bool compatible(const Space& other) const;

 private:
  std::vector<double> weights_;
  double q_;
};

using SpacePtr = std::shared_ptr<const Space>;

class SpaceVector {
 public:
  SpaceVector(SpacePtr space, std::vector<double> coeffs);

  static SpaceVector zeros(SpacePtr space);
  static SpaceVector basis(SpacePtr space, std::size_t i);

  const SpacePtr& space_ptr() const { return space_; }
  const Space& space() const { return *space_; }
  std::size_t size() const { return coeffs_.size(); }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  std::span<const double> coeffs() const { return coeffs_; }
  const std::vector<double>& data() const { return coeffs_; }

  SpaceVector with_coeffs(std::vector<double> coeffs) const;
  // this + a * x
  SpaceVector axpy(double a, const SpaceVector& x) const;

  bool all_finite() const;

  friend SpaceVector operator+(const SpaceVector& a, const SpaceVector& b);
  friend SpaceVector operator-(const SpaceVector& a, const SpaceVector& b);
  friend SpaceVector operator-(const SpaceVector& a);
  friend SpaceVector operator*(double t, const SpaceVector& a);

 private:
  SpacePtr space_;
  std::vector<double> coeffs_;
};

void require_compatible(const SpaceVector& a, const SpaceVector& b);

double norm(const SpaceVector& v);
double pair(const SpaceVector& f, const SpaceVector& v);
double dual_norm(const SpaceVector& f);
SpaceVector dual_maximizer(const SpaceVector& f);

// Raw weighted norms on coefficient blocks; used for restricted (sub-block)
// computations where building a SpaceVector would be wasteful.
namespace lq {
double norm(std::span<const double> x, std::span<const double> w, double q);
// coefficients of the unit maximizer of f restricted to the block, q-space
std::vector<double> maximizer(std::span<const double> f, std::span<const double> w,
                              double q);
}  // namespace lq

}  // namespace dictdescent
