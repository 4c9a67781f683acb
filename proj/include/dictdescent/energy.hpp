#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dictdescent/rng.hpp"
#include "dictdescent/space.hpp"

namespace dictdescent {

enum class SmoothnessMode { global, bounded };

// Hoelder exponent p of the gradient, ellipticity order s and the constants.
// Missing constants are filled in from the estimators at run time.
struct SmoothnessParams {
  double p = 1.0;
  double s = 2.0;
  std::optional<double> lip;
  std::optional<double> alpha;
  SmoothnessMode mode = SmoothnessMode::global;

  // throws ParameterError on out-of-range values and InconsistentAssumptions
  // when s and p violate the exponent relation for the mode
  void validate() const;
};

const char* to_string(SmoothnessMode mode);

class Energy {
 public:
  virtual ~Energy() = default;

  virtual std::string kind() const = 0;
  virtual double value(const SpaceVector& u) const = 0;
  virtual SpaceVector gradient(const SpaceVector& u) const = 0;
  virtual std::pair<double, SpaceVector> evaluate(const SpaceVector& u) const {
    return {value(u), gradient(u)};
  }

  // Closed-form minimizer of t -> E(u + t w) when available; g = E'(u).
  virtual std::optional<double> exact_line_step(const SpaceVector& u, const SpaceVector& g,
                                                const SpaceVector& w) const {
    (void)u, (void)g, (void)w;
    return std::nullopt;
  }

  // true when a central difference of width h straddles a point where the
  // gradient is not differentiable
  virtual bool near_kink(const SpaceVector& x, double h) const {
    (void)x, (void)h;
    return false;
  }

  // lower bound for alpha that holds on the whole space, if one is known
  virtual std::optional<double> certified_alpha() const { return std::nullopt; }

  virtual SpaceVector minimize(double tol) const = 0;

  const SpacePtr& space() const { return space_; }
  const SmoothnessParams& params() const { return params_; }
  const std::optional<SpaceVector>& reference() const { return reference_; }
  const std::string& reference_solver() const { return reference_solver_; }

 protected:
  Energy(SpacePtr space, SmoothnessParams params)
      : space_(std::move(space)), params_(params) {}
  void set_constants(double lip, double alpha) {
    params_.lip = lip;
    params_.alpha = alpha;
  }
  void set_reference(SpaceVector u, std::string solver) {
    reference_ = std::move(u);
    reference_solver_ = std::move(solver);
  }

 private:
  SpacePtr space_;
  SmoothnessParams params_;
  std::optional<SpaceVector> reference_;
  std::string reference_solver_;
};

using EnergyPtr = std::shared_ptr<const Energy>;

// E(f) = 1/(p+1) sum w |f - t|^(p+1)
class PowerEnergy final : public Energy {
 public:
  PowerEnergy(SpaceVector target, double p);
  std::string kind() const override { return "power"; }
  double value(const SpaceVector& u) const override;
  SpaceVector gradient(const SpaceVector& u) const override;
  bool near_kink(const SpaceVector& x, double h) const override;
  SpaceVector minimize(double tol) const override;
  const SpaceVector& target() const { return target_; }
  double exponent() const { return p_; }

 private:
  SpaceVector target_;
  double p_;
};

// E(u) = 1/2 <Au, u> - <source, u>, weighted pairing
class QuadraticEnergy final : public Energy {
 public:
  QuadraticEnergy(Eigen::MatrixXd a, SpaceVector source);
  std::string kind() const override { return "quadratic"; }
  double value(const SpaceVector& u) const override;
  SpaceVector gradient(const SpaceVector& u) const override;
  std::pair<double, SpaceVector> evaluate(const SpaceVector& u) const override;
  std::optional<double> exact_line_step(const SpaceVector& u, const SpaceVector& g,
                                        const SpaceVector& w) const override;
  std::optional<double> certified_alpha() const override { return lambda_min_; }
  SpaceVector minimize(double tol) const override;

  const Eigen::MatrixXd& matrix() const { return a_; }
  const SpaceVector& source() const { return source_; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }

 private:
  Eigen::VectorXd apply(const SpaceVector& u) const;

  Eigen::MatrixXd a_;
  SpaceVector source_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> factor_;  // of W A
};

// 1-D finite differences on (0,1), Dirichlet ends, n interior nodes, h = 1/(n+1):
// E(u) = 1/q sum_edges h |D_e u|^q - <f, u>
class PLaplacianEnergy final : public Energy {
 public:
  PLaplacianEnergy(std::size_t grid_n, double q_exp, SpaceVector source, double ref_tol);
  std::string kind() const override { return "plaplacian"; }
  double value(const SpaceVector& u) const override;
  SpaceVector gradient(const SpaceVector& u) const override;
  std::pair<double, SpaceVector> evaluate(const SpaceVector& u) const override;
  std::optional<double> certified_alpha() const override { return alpha_cert_; }
  SpaceVector minimize(double tol) const override;

  std::size_t grid_n() const { return n_; }
  double grid_exponent() const { return q_; }
  const SpaceVector& source() const { return source_; }

 private:
  std::vector<double> differences(std::span<const double> u) const;
  std::vector<double> partials(std::span<const double> u) const;  // dE/du_i

  std::size_t n_;
  double q_;
  double h_;
  SpaceVector source_;
  double alpha_cert_ = 0.0;
};

EnergyPtr power_energy(const SpaceVector& target, double p);
EnergyPtr quadratic_energy(const Eigen::MatrixXd& a, const SpaceVector& source);
EnergyPtr plaplacian_energy(std::size_t grid_n, double q_exp, const SpaceVector& source,
                            double ref_tol = 1e-11);

// tridiagonal (-1, 2, -1)/h^2 with h = 1/(n+1)
Eigen::MatrixXd dirichlet_laplacian(std::size_t n);
// n nodes with weight h = 1/(n+1)
SpacePtr grid_space(std::size_t n, double q);

// c_p = (1 + 2^(1/p))^(p/(p+1))
double power_lipschitz(double p);

// max_i |g_i - fd_i| / max(|g|_inf, |fd|_inf), fd the central difference
// (E(x + h e_i) - E(x - h e_i)) / (2 h w_i)
double check_gradient(const Energy& energy, const SpaceVector& x, double h);

struct EstimateResult {
  double exponent = 0.0;
  double constant = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
  std::vector<double> log_dist;
  std::vector<double> log_value;

  // max (smoothness) or min (ellipticity) of value / dist^k over the sample
  double upper_envelope(double k) const;
  double lower_envelope(double k) const;
};

// region radius <= 0 selects the default 2 |u*| + 1
double default_region_radius(const Energy& energy);

EstimateResult estimate_smoothness(const Energy& energy, double region_radius, int samples,
                                   std::uint64_t seed);
EstimateResult estimate_ellipticity(const Energy& energy, double region_radius, int samples,
                                    std::uint64_t seed);

SpaceVector solve_reference(const Energy& energy, double tol);

// random vector with norm <= radius, direction from normalized gaussians,
// radius scaled by U^(1/n)
SpaceVector random_in_ball(const SpacePtr& space, double radius, Rng& rng);
SpaceVector random_unit(const SpacePtr& space, Rng& rng);

}  // namespace dictdescent
