#include "dictdescent/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dictdescent/errors.hpp"

namespace dictdescent {

namespace {

Eigen::Map<const Eigen::VectorXd> as_eigen(const SpaceVector& v) {
  return {v.coeffs().data(), static_cast<Eigen::Index>(v.size())};
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double signed_pow(double x, double e) {
  if (x == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(x), e), x);
}

}  // namespace

void SmoothnessParams::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("p must lie in (0, 1]");
  if (!(s > 1.0)) throw ParameterError("s must be > 1");
  if (lip && !(*lip > 0.0)) throw ParameterError("lip must be positive");
  if (alpha && !(*alpha > 0.0)) throw ParameterError("alpha must be positive");
  constexpr double tol = 1e-9;
  if (s < p + 1.0 - tol)
    throw InconsistentAssumptions(
        "ellipticity order s must satisfy s >= p + 1 for an energy with p-Hoelder gradient");
  if (mode == SmoothnessMode::global && std::abs(s - (p + 1.0)) > tol)
    throw InconsistentAssumptions("a globally p-Hoelder gradient forces s = p + 1");
}

const char* to_string(SmoothnessMode mode) {
  return mode == SmoothnessMode::global ? "global" : "bounded";
}

double power_lipschitz(double p) {
  return std::pow(1.0 + std::pow(2.0, 1.0 / p), p / (p + 1.0));
}

// ---------------------------------------------------------------- power

namespace {
SmoothnessParams power_params(double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw ParameterError("power energy exponent p must lie in (0, 1], got " + std::to_string(p));
  SmoothnessParams sp;
  sp.p = p;
  sp.s = p + 1.0;
  sp.lip = power_lipschitz(p);
  sp.mode = SmoothnessMode::global;
  return sp;
}
}  // namespace

PowerEnergy::PowerEnergy(SpaceVector target, double p)
    : Energy(target.space_ptr(), power_params(p)), target_(std::move(target)), p_(p) {
  if (std::abs(space()->q() - (p + 1.0)) > 1e-12)
    throw ParameterError("power energy needs a space with q = p + 1");
  if (!target_.all_finite()) throw InvalidInput("non-finite target");
  set_reference(target_, "closed form (target)");
}

double PowerEnergy::value(const SpaceVector& u) const {
  require_compatible(u, target_);
  const auto w = space()->weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    acc += w[i] * std::pow(std::abs(u[i] - target_[i]), p_ + 1.0);
  return acc / (p_ + 1.0);
}

SpaceVector PowerEnergy::gradient(const SpaceVector& u) const {
  require_compatible(u, target_);
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = signed_pow(u[i] - target_[i], p_);
  return u.with_coeffs(std::move(g));
}

bool PowerEnergy::near_kink(const SpaceVector& x, double h) const {
  if (p_ >= 1.0) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] - target_[i]) < 1e3 * h) return true;
  return false;
}

SpaceVector PowerEnergy::minimize(double) const { return target_; }

// ------------------------------------------------------------ quadratic

namespace {
SmoothnessParams quadratic_params() {
  SmoothnessParams sp;
  sp.p = 1.0;
  sp.s = 2.0;
  sp.mode = SmoothnessMode::global;
  return sp;
}
}  // namespace

QuadraticEnergy::QuadraticEnergy(Eigen::MatrixXd a, SpaceVector source)
    : Energy(source.space_ptr(), quadratic_params()), a_(std::move(a)), source_(std::move(source)) {
  const auto n = static_cast<Eigen::Index>(source_.size());
  if (a_.rows() != n || a_.cols() != n)
    throw DimensionMismatch("operator is " + std::to_string(a_.rows()) + "x" +
                            std::to_string(a_.cols()) + " but the space has dimension " +
                            std::to_string(n));
  if (std::abs(space()->q() - 2.0) > 1e-12)
    throw ParameterError("quadratic energy needs a space with q = 2");
  if (!a_.allFinite() || !source_.all_finite()) throw InvalidInput("non-finite operator or source");

  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(space()->weights().data(), n);
  Eigen::MatrixXd wa = w.asDiagonal() * a_;
  const double scale = std::max(wa.cwiseAbs().maxCoeff(), 1e-300);
  if ((wa - wa.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ParameterError("operator is not symmetric with respect to the weighted pairing");
  wa = 0.5 * (wa + wa.transpose());
  factor_.compute(wa);
  if (factor_.info() != Eigen::Success)
    throw ParameterError("operator is not positive definite (Cholesky factorization failed)");

  const Eigen::VectorXd sq = w.cwiseSqrt();
  Eigen::MatrixXd sym = sq.cwiseInverse().asDiagonal() * wa * sq.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  lambda_min_ = eig.eigenvalues().minCoeff();
  lambda_max_ = eig.eigenvalues().maxCoeff();
  if (!(lambda_min_ > 0.0)) throw ParameterError("operator is not positive definite");
  set_constants(lambda_max_, lambda_min_);

  Eigen::VectorXd rhs = w.asDiagonal() * as_eigen(source_);
  set_reference(source_.with_coeffs(to_std(factor_.solve(rhs))), "closed form (Cholesky solve)");
}

Eigen::VectorXd QuadraticEnergy::apply(const SpaceVector& u) const {
  require_compatible(u, source_);
  return a_ * as_eigen(u);
}

double QuadraticEnergy::value(const SpaceVector& u) const { return evaluate(u).first; }

SpaceVector QuadraticEnergy::gradient(const SpaceVector& u) const {
  Eigen::VectorXd g = apply(u) - as_eigen(source_);
  return u.with_coeffs(to_std(g));
}

std::pair<double, SpaceVector> QuadraticEnergy::evaluate(const SpaceVector& u) const {
  const Eigen::VectorXd au = apply(u);
  const auto w = space()->weights();
  double e = 0.0;
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    e += w[i] * (0.5 * au[k] - source_[i]) * u[i];
    g[i] = au[k] - source_[i];
  }
  return {e, u.with_coeffs(std::move(g))};
}

std::optional<double> QuadraticEnergy::exact_line_step(const SpaceVector& u, const SpaceVector& g,
                                                       const SpaceVector& w) const {
  (void)u;
  const SpaceVector aw = w.with_coeffs(to_std(apply(w)));
  const double curv = pair(aw, w);
  if (!(curv > 0.0)) throw EllipticityViolated("non-positive curvature along line");
  return -pair(g, w) / curv;
}

SpaceVector QuadraticEnergy::minimize(double tol) const {
  SpaceVector u = *reference();
  double res = dual_norm(gradient(u));
  const Eigen::Map<const Eigen::VectorXd> w(space()->weights().data(),
                                            static_cast<Eigen::Index>(u.size()));
  for (int it = 0; it < 5 && res > tol; ++it) {
    const Eigen::VectorXd r = w.asDiagonal() * as_eigen(gradient(u));
    u = u.axpy(-1.0, u.with_coeffs(to_std(factor_.solve(r))));
    res = dual_norm(gradient(u));
  }
  if (res > tol)
    throw ConvergenceFailure("quadratic solve residual above tolerance", res);
  return u;
}

// ----------------------------------------------------------- p-laplacian

namespace {
SmoothnessParams plaplacian_params(double q_exp) {
  if (!(q_exp >= 2.0) || !std::isfinite(q_exp))
    throw UnsupportedExponent("p-Laplacian grid exponent must be >= 2, got " +
                              std::to_string(q_exp));
  SmoothnessParams sp;
  sp.p = 1.0;
  sp.s = q_exp;
  sp.mode = SmoothnessMode::bounded;
  return sp;
}
}  // namespace

PLaplacianEnergy::PLaplacianEnergy(std::size_t grid_n, double q_exp, SpaceVector source,
                                   double ref_tol)
    : Energy(source.space_ptr(), plaplacian_params(q_exp)),
      n_(grid_n),
      q_(q_exp),
      h_(1.0 / static_cast<double>(grid_n + 1)),
      source_(std::move(source)) {
  if (n_ < 2) throw ParameterError("p-Laplacian grid needs at least 2 interior nodes");
  if (source_.size() != n_) throw DimensionMismatch("source length differs from grid size");
  if (std::abs(space()->q() - q_) > 1e-12)
    throw ParameterError("p-Laplacian energy needs a space with q equal to the grid exponent");
  if (!source_.all_finite()) throw InvalidInput("non-finite source");

  // |v_i| <= min(x_i, 1 - x_i)^(1/q') |Dv|_q on the grid, and the pointwise
  // monotonicity bound for |a|^(q-2)a gives the factor 2^(2-q)
  double cp = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double x = static_cast<double>(i + 1) * h_;
    cp += space()->weight(i) * std::pow(std::min(x, 1.0 - x), q_ - 1.0);
  }
  alpha_cert_ = std::pow(2.0, 2.0 - q_) / cp;

  set_reference(minimize(ref_tol), "damped Newton with Armijo backtracking");
}

std::vector<double> PLaplacianEnergy::differences(std::span<const double> u) const {
  std::vector<double> d(n_ + 1);
  for (std::size_t e = 0; e <= n_; ++e) {
    const double left = e == 0 ? 0.0 : u[e - 1];
    const double right = e == n_ ? 0.0 : u[e];
    d[e] = (right - left) / h_;
  }
  return d;
}

std::vector<double> PLaplacianEnergy::partials(std::span<const double> u) const {
  const auto d = differences(u);
  std::vector<double> flux(n_ + 1);
  for (std::size_t e = 0; e <= n_; ++e) flux[e] = signed_pow(d[e], q_ - 1.0);
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    out[i] = flux[i] - flux[i + 1] - space()->weight(i) * source_[i];
  return out;
}

double PLaplacianEnergy::value(const SpaceVector& u) const {
  require_compatible(u, source_);
  const auto d = differences(u.coeffs());
  double acc = 0.0;
  for (double de : d) acc += h_ * std::pow(std::abs(de), q_);
  return acc / q_ - pair(source_, u);
}

SpaceVector PLaplacianEnergy::gradient(const SpaceVector& u) const {
  require_compatible(u, source_);
  auto g = partials(u.coeffs());
  for (std::size_t i = 0; i < n_; ++i) g[i] /= space()->weight(i);
  return u.with_coeffs(std::move(g));
}

std::pair<double, SpaceVector> PLaplacianEnergy::evaluate(const SpaceVector& u) const {
  return {value(u), gradient(u)};
}

SpaceVector PLaplacianEnergy::minimize(double tol) const {
  SpaceVector u = SpaceVector::zeros(space());
  const auto n = static_cast<Eigen::Index>(n_);
  double res = dual_norm(gradient(u));
  constexpr int max_iter = 500;
  for (int it = 0; it < max_iter && res > tol; ++it) {
    const auto dE = partials(u.coeffs());
    Eigen::VectorXd grad(n);
    for (Eigen::Index i = 0; i < n; ++i) grad[i] = dE[static_cast<std::size_t>(i)];

    const auto d = differences(u.coeffs());
    std::vector<double> c(n_ + 1);
    double cmax = 0.0;
    for (std::size_t e = 0; e <= n_; ++e) {
      c[e] = (q_ - 1.0) * std::pow(std::abs(d[e]), q_ - 2.0) / h_;
      cmax = std::max(cmax, c[e]);
    }
    Eigen::VectorXd dir;
    if (cmax > 0.0) {
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        hess(i, i) = c[k] + c[k + 1] + 1e-14 * cmax;
        if (i + 1 < n) hess(i, i + 1) = hess(i + 1, i) = -c[k + 1];
      }
      dir = -hess.ldlt().solve(grad);
      if (!dir.allFinite() || grad.dot(dir) >= 0.0) dir = -grad;
    } else {
      dir = -grad;
    }

    const double e0 = value(u);
    const double slope = grad.dot(dir);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 200; ++k, t *= 0.5) {
      SpaceVector trial = u.axpy(t, u.with_coeffs(to_std(dir)));
      const double e1 = value(trial);
      const double r1 = dual_norm(gradient(trial));
      // near the optimum energy differences drop below rounding, so a
      // full step that halves the residual is accepted as well
      if (e1 <= e0 + 1e-4 * t * slope || (k == 0 && r1 < 0.5 * res)) {
        u = std::move(trial);
        res = r1;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (res > tol) throw ConvergenceFailure("p-Laplacian reference solve did not converge", res);
  return u;
}

// ------------------------------------------------------------- factories

EnergyPtr power_energy(const SpaceVector& target, double p) {
  return std::make_shared<const PowerEnergy>(target, p);
}

EnergyPtr quadratic_energy(const Eigen::MatrixXd& a, const SpaceVector& source) {
  return std::make_shared<const QuadraticEnergy>(a, source);
}

EnergyPtr plaplacian_energy(std::size_t grid_n, double q_exp, const SpaceVector& source,
                            double ref_tol) {
  return std::make_shared<const PLaplacianEnergy>(grid_n, q_exp, source, ref_tol);
}

Eigen::MatrixXd dirichlet_laplacian(std::size_t n) {
  const double h = 1.0 / static_cast<double>(n + 1);
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, i) = 2.0 / (h * h);
    if (i + 1 < m) a(i, i + 1) = a(i + 1, i) = -1.0 / (h * h);
  }
  return a;
}

SpacePtr grid_space(std::size_t n, double q) {
  return Space::uniform(n, q, 1.0 / static_cast<double>(n + 1));
}

SpaceVector solve_reference(const Energy& energy, double tol) {
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  SpaceVector u = energy.minimize(tol);
  const double res = dual_norm(energy.gradient(u));
  if (res > tol) throw ConvergenceFailure("reference solve residual above tolerance", res);
  return u;
}

}  // namespace dictdescent
