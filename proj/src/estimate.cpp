#include <algorithm>
#include <cmath>
#include <limits>

#include "dictdescent/energy.hpp"
#include "dictdescent/errors.hpp"
#include "dictdescent/rng.hpp"
#include "dictdescent/stats.hpp"

namespace dictdescent {

SpaceVector random_unit(const SpacePtr& space, Rng& rng) {
  for (;;) {
    SpaceVector v(space, rng.normals(space->dim()));
    const double nv = norm(v);
    if (nv > 0.0) return (1.0 / nv) * v;
  }
}

SpaceVector random_in_ball(const SpacePtr& space, double radius, Rng& rng) {
  const SpaceVector dir = random_unit(space, rng);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(space->dim()));
  return r * dir;
}

double check_gradient(const Energy& energy, const SpaceVector& x, double h) {
  if (!(h > 0.0)) throw ParameterError("finite-difference step must be positive");
  const SpaceVector g = energy.gradient(x);
  std::vector<double> fd(x.size());
  std::vector<double> c(x.data());
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = c[i];
    c[i] = xi + h;
    const double ep = energy.value(x.with_coeffs(c));
    c[i] = xi - h;
    const double em = energy.value(x.with_coeffs(c));
    c[i] = xi;
    fd[i] = (ep - em) / (2.0 * h * x.space().weight(i));
    scale = std::max({scale, std::abs(fd[i]), std::abs(g[i])});
  }
  double err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(g[i] - fd[i]));
  return scale > 0.0 ? err / scale : err;
}

double EstimateResult::upper_envelope(double k) const {
  double best = 0.0;
  for (std::size_t i = 0; i < log_dist.size(); ++i)
    best = std::max(best, std::exp(log_value[i] - k * log_dist[i]));
  return best;
}

double EstimateResult::lower_envelope(double k) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < log_dist.size(); ++i)
    best = std::min(best, std::exp(log_value[i] - k * log_dist[i]));
  return best;
}

double default_region_radius(const Energy& energy) {
  const auto& ref = energy.reference();
  return 2.0 * (ref ? norm(*ref) : 0.0) + 1.0;
}

namespace {

struct Design {
  SpaceVector center;
  double radius;
  double anchored_hi;
};

Design make_design(const Energy& energy, double region_radius) {
  const double r = region_radius > 0.0 ? region_radius : default_region_radius(energy);
  SpaceVector center = energy.reference() ? *energy.reference() : SpaceVector::zeros(energy.space());
  const double rc = norm(center);
  return {center, r, r - rc > 0.0 ? r - rc : r};
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

// pair of points close to u*, at relative scale kappa in [0,1]
std::pair<SpaceVector, SpaceVector> anchored_pair(const Design& d, Rng& rng) {
  const auto& sp = d.center.space_ptr();
  const double rho = log_uniform(rng, 1e-2 * d.anchored_hi, d.anchored_hi);
  const SpaceVector a = random_in_ball(sp, 1.0, rng);
  const SpaceVector b = random_in_ball(sp, 1.0, rng);
  const double kappa = rng.uniform() < 0.25 ? 0.0 : rng.uniform();
  return {d.center.axpy(rho, a), d.center.axpy(rho * kappa, b)};
}

// nearby pair around a random base point of the ball
std::pair<SpaceVector, SpaceVector> local_pair(const Design& d, Rng& rng) {
  const auto& sp = d.center.space_ptr();
  const SpaceVector c = random_in_ball(sp, d.radius, rng);
  const double rho = log_uniform(rng, 1e-4 * d.radius, d.radius);
  return {c, c.axpy(rho, random_in_ball(sp, 1.0, rng))};
}

void check_samples(int samples) {
  if (samples < 100) throw ParameterError("estimators need at least 100 samples");
}

}  // namespace

EstimateResult estimate_smoothness(const Energy& energy, double region_radius, int samples,
                                   std::uint64_t seed) {
  check_samples(samples);
  const Design d = make_design(energy, region_radius);
  Rng rng(seed);
  EstimateResult out;
  std::vector<double> lx[2], ly[2];
  for (int k = 0; k < samples; ++k) {
    const int design = k % 2;
    auto [u, w] = design == 0 ? local_pair(d, rng) : anchored_pair(d, rng);
    const double dist = norm(u - w);
    const double val = dual_norm(energy.gradient(u) - energy.gradient(w));
    if (!(dist > 0.0) || !(val > 0.0) || !std::isfinite(val)) {
      ++out.skipped;
      continue;
    }
    lx[design].push_back(std::log(dist));
    ly[design].push_back(std::log(val));
    out.log_dist.push_back(std::log(dist));
    out.log_value.push_back(std::log(val));
  }
  out.used = out.log_dist.size();
  if (lx[0].size() < 2 || lx[1].size() < 2) throw ParameterError("degenerate smoothness sample");
  out.exponent = std::min(linear_fit(lx[0], ly[0]).slope, linear_fit(lx[1], ly[1]).slope);
  out.constant = out.upper_envelope(out.exponent);
  return out;
}

EstimateResult estimate_ellipticity(const Energy& energy, double region_radius, int samples,
                                    std::uint64_t seed) {
  check_samples(samples);
  const Design d = make_design(energy, region_radius);
  Rng rng(seed);
  EstimateResult out;
  std::vector<double> ax, ay;
  for (int k = 0; k < samples; ++k) {
    const bool anchored = k % 2 == 1;
    auto [u, w] = anchored ? anchored_pair(d, rng) : local_pair(d, rng);
    const SpaceVector diff = u - w;
    const double dist = norm(diff);
    const double val = pair(energy.gradient(u) - energy.gradient(w), diff);
    if (!(dist > 0.0) || !(val > 0.0) || !std::isfinite(val)) {
      ++out.skipped;
      continue;
    }
    if (anchored) {
      ax.push_back(std::log(dist));
      ay.push_back(std::log(val));
    }
    out.log_dist.push_back(std::log(dist));
    out.log_value.push_back(std::log(val));
  }
  out.used = out.log_dist.size();
  if (ax.size() < 2) throw ParameterError("degenerate ellipticity sample");
  // the order comes from pairs around u*; the constant has to cover every pair
  out.exponent = linear_fit(ax, ay).slope;
  out.constant = out.lower_envelope(out.exponent);
  return out;
}

}  // namespace dictdescent
