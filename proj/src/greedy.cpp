#include "dictdescent/greedy.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "dictdescent/errors.hpp"

namespace dictdescent {

const char* to_string(GreedyMode mode) {
  return mode == GreedyMode::sigma_line ? "sigma-line" : "exact-union";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::sigma_stop: return "sigma-stop";
    case Termination::flat_step: return "flat-step";
    case Termination::max_iter: return "max-iter";
  }
  return "?";
}

void GreedyConfig::validate() const {
  if (max_iter < 1) throw ConfigError("greedy.max_iter must be >= 1");
  if (!(sigma_stop > 0.0)) throw ConfigError("greedy.sigma_stop must be positive");
  if (!(line_tol > 0.0)) throw ConfigError("greedy.line_tol must be positive");
  if (!(bracket_growth > 1.0)) throw ConfigError("greedy.bracket_growth must be > 1");
}

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

LineResult line_minimize(const Energy& energy, const SpaceVector& u, const SpaceVector& w,
                         double tol, double growth) {
  if (std::abs(norm(w) - 1.0) > 1e-10) throw ParameterError("line direction must have unit norm");
  const auto [e0, g0] = energy.evaluate(u);
  auto finish = [&](double t) -> LineResult {
    if (t == 0.0) return {0.0, e0};
    const double v = energy.value(u.axpy(t, w));
    if (!(v <= e0)) return {0.0, e0};
    return {t, v};
  };
  if (auto t = energy.exact_line_step(u, g0, w)) return finish(*t);

  auto dphi = [&](double t) { return pair(energy.gradient(u.axpy(t, w)), w); };
  const double d0 = pair(g0, w);
  if (d0 == 0.0) return {0.0, e0};
  const double dir = d0 < 0.0 ? 1.0 : -1.0;
  double a = 0.0, fa = d0;
  double b = dir, fb = dphi(b);
  while ((fb < 0.0) == (d0 < 0.0) && fb != 0.0) {
    a = b;
    fa = fb;
    b *= growth;
    if (std::abs(b) > 0x1.0p60)
      throw EllipticityViolated("energy appears unbounded below along a line (bracket beyond 2^60)");
    fb = dphi(b);
  }
  if (fb == 0.0) return finish(b);
  double lo = a, hi = b, flo = fa, fhi = fb;
  if (lo > hi) {
    std::swap(lo, hi);
    std::swap(flo, fhi);
  }
  std::uintmax_t iters = 300;
  auto stop = [tol](double x, double y) {
    return std::abs(y - x) <= tol * std::max(std::abs(x), std::abs(y));
  };
  const auto [r0, r1] = boost::math::tools::toms748_solve(dphi, lo, hi, flo, fhi, stop, iters);
  const double t = std::abs(dphi(r0)) <= std::abs(dphi(r1)) ? r0 : r1;
  return finish(t);
}

namespace {

struct StepCandidate {
  SpaceVector z;
  double value;
};

// minimizes E(u + B c) over the subspace coordinates c by gradient descent
// with Barzilai-Borwein steps and Armijo backtracking
StepCandidate subspace_solve(const Energy& energy, const SpaceVector& u, const Subspace& s,
                             double tol) {
  const Space& sp = u.space();
  const std::size_t n = sp.dim();
  const std::size_t d = s.dim();
  auto embed = [&](const std::vector<double>& c) {
    std::vector<double> z(n, 0.0);
    if (!s.coords.empty()) {
      for (std::size_t k = 0; k < d; ++k) z[s.coords[k]] = c[k];
    } else {
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < n; ++i)
          z[i] += s.basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * c[k];
    }
    return SpaceVector(u.space_ptr(), std::move(z));
  };
  auto reduced = [&](const SpaceVector& g) {
    std::vector<double> r(d, 0.0);
    if (!s.coords.empty()) {
      for (std::size_t k = 0; k < d; ++k) r[k] = sp.weight(s.coords[k]) * g[s.coords[k]];
    } else {
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < n; ++i)
          r[k] += s.basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) *
                  sp.weight(i) * g[i];
    }
    return r;
  };
  auto nrm2 = [](const std::vector<double>& v) {
    double a = 0.0;
    for (double x : v) a += x * x;
    return std::sqrt(a);
  };

  std::vector<double> c(d, 0.0);
  auto [e, g] = energy.evaluate(u);
  std::vector<double> r = reduced(g);
  const double r0 = nrm2(r);
  double step = 1.0;
  for (int it = 0; it < 5000 && nrm2(r) > tol * (1.0 + r0); ++it) {
    const double rr = nrm2(r) * nrm2(r);
    bool moved = false;
    for (int k = 0; k < 80; ++k, step *= 0.5) {
      std::vector<double> cn(c);
      for (std::size_t j = 0; j < d; ++j) cn[j] -= step * r[j];
      auto [en, gn] = energy.evaluate(u + embed(cn));
      if (en <= e - 1e-4 * step * rr) {
        std::vector<double> rn = reduced(gn);
        double sy = 0.0, ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double dc = cn[j] - c[j];
          sy += dc * (rn[j] - r[j]);
          ss += dc * dc;
        }
        c = std::move(cn);
        r = std::move(rn);
        e = en;
        step = sy > 0.0 ? ss / sy : step * 2.0;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return {embed(c), e};
}

StepResult take_step(const Energy& energy, const Dictionary& dict, const SpaceVector& u, double e_u,
                     const SpaceVector& g_u, const Witness& wit, const GreedyConfig& cfg) {
  StepResult out{u, wit.sigma, 0.0, e_u, e_u};
  if (cfg.mode == GreedyMode::sigma_line) {
    const LineResult lr = line_minimize(energy, u, wit.w, cfg.line_tol, cfg.bracket_growth);
    out.u_next = u.axpy(lr.t, wit.w);
    out.energy_after = lr.value;
    out.step_norm = std::abs(lr.t);
    return out;
  }

  (void)g_u;
  StepCandidate best{SpaceVector::zeros(u.space_ptr()), e_u};
  if (const auto* fa = std::get_if<FiniteAtomData>(&dict.data())) {
    for (const auto& k : fa->atoms) {
      const LineResult lr = line_minimize(energy, u, k, cfg.line_tol, cfg.bracket_growth);
      if (lr.value < best.value) best = {lr.t * k, lr.value};
    }
  } else if (const auto* su = std::get_if<SubspaceUnionData>(&dict.data())) {
    const double inner_tol = std::max(cfg.line_tol, 1e-10);
    for (const auto& s : su->subspaces) {
      StepCandidate c = subspace_solve(energy, u, s, inner_tol);
      if (c.value < best.value) best = std::move(c);
    }
    // polish along the chosen direction so that the step is line-exact
    const double zn = norm(best.z);
    if (zn > 0.0) {
      const SpaceVector zhat = (1.0 / zn) * best.z;
      const LineResult lr = line_minimize(energy, u, zhat, cfg.line_tol, cfg.bracket_growth);
      if (lr.value <= best.value) best = {lr.t * zhat, lr.value};
    }
  } else {
    throw ConfigError(std::string("exact-union mode is not available for dictionary kind ") +
                      to_string(dict.kind()));
  }
  out.u_next = u + best.z;
  out.energy_after = best.value;
  out.step_norm = norm(best.z);
  return out;
}

}  // namespace

StepResult greedy_step(const Energy& energy, const Dictionary& dict, const SpaceVector& u,
                       const GreedyConfig& config) {
  if (!u.all_finite()) throw InvalidInput("non-finite iterate");
  const auto [e, g] = energy.evaluate(u);
  const Witness wit = sigma_witness(dict, g);
  if (wit.sigma <= config.sigma_stop) return {u, wit.sigma, 0.0, e, e};
  return take_step(energy, dict, u, e, g, wit, config);
}

GreedyTrace run_greedy(const Energy& energy, const Dictionary& dict, const GreedyConfig& config) {
  config.validate();
  if (!dict.space()->compatible(*energy.space()))
    throw DimensionMismatch("energy and dictionary live in different spaces");
  const double s = energy.params().s;
  const auto& ref = energy.reference();
  const double e_star = ref ? energy.value(*ref) : kNaN;

  SpaceVector u = SpaceVector::zeros(energy.space());
  auto [e, g] = energy.evaluate(u);
  const double floor = 1e-15 * (1.0 + std::abs(e));
  std::vector<IterationRecord> rows;
  Termination reason = Termination::max_iter;
  double cum = 0.0;

  for (int m = 0;; ++m) {
    const Witness wit = sigma_witness(dict, g);
    IterationRecord row;
    row.m = m;
    row.energy = e;
    row.gap = ref ? e - e_star : kNaN;
    row.sigma = wit.sigma;
    row.grad_dual_norm = dual_norm(g);
    row.iterate_norm = norm(u);
    row.error_norm = ref ? norm(u - *ref) : kNaN;
    row.cum_step_s = cum;
    if (wit.sigma <= config.sigma_stop) {
      reason = Termination::sigma_stop;
      rows.push_back(row);
      break;
    }
    if (m == config.max_iter) {
      reason = Termination::max_iter;
      rows.push_back(row);
      break;
    }
    StepResult st = take_step(energy, dict, u, e, g, wit, config);
    auto [e1, g1] = energy.evaluate(st.u_next);
    if (!(e - e1 >= floor)) {
      reason = Termination::flat_step;
      rows.push_back(row);
      break;
    }
    const SpaceVector z = st.u_next - u;
    row.step_norm = norm(z);
    row.orth_residual = pair(g1, z);
    cum += std::pow(row.step_norm, s);
    row.cum_step_s = cum;
    rows.push_back(row);
    u = std::move(st.u_next);
    e = e1;
    g = std::move(g1);
  }
  return GreedyTrace{std::move(rows), std::move(u), reason, s, e_star};
}

// ------------------------------------------------------------------ checks

namespace {
CheckReport named_check(const char* name) {
  CheckReport r;
  r.name = name;
  return r;
}
}  // namespace

double energy_slack(const GreedyTrace& trace) {
  if (trace.rows.empty()) return 0.0;
  return 1e-10 * (std::abs(trace.rows.front().energy) + std::abs(trace.rows.back().energy));
}

CheckReport check_monotone(const GreedyTrace& trace) {
  CheckReport r = named_check("monotonicity");
  for (std::size_t m = 0; m + 1 < trace.rows.size(); ++m) {
    ++r.checked;
    const double inc = trace.rows[m + 1].energy - trace.rows[m].energy;
    r.worst = std::max(r.worst, inc);
    if (inc > 0.0) ++r.violations;
  }
  r.passed = r.violations == 0;
  return r;
}

CheckReport check_one_step_bound(const GreedyTrace& trace, double beta, double p) {
  CheckReport r = named_check("one_step_bound");
  const double slack = energy_slack(trace);
  r.worst = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m + 1 < trace.rows.size(); ++m) {
    ++r.checked;
    const auto& row = trace.rows[m];
    const double bound = row.energy - beta * std::pow(row.sigma, 1.0 + 1.0 / p);
    const double excess = trace.rows[m + 1].energy - bound;
    r.worst = std::max(r.worst, excess);
    if (excess > slack) ++r.violations;
  }
  if (r.checked == 0) r.worst = 0.0;
  r.passed = r.violations == 0;
  r.detail = "worst = max_m E(u_{m+1}) - bound_m";
  return r;
}

CheckReport check_orthogonality(const GreedyTrace& trace, double tol) {
  CheckReport r = named_check("orthogonality");
  for (std::size_t m = 0; m + 1 < trace.rows.size(); ++m) {
    const auto& row = trace.rows[m];
    if (row.step_norm == 0.0) continue;
    ++r.checked;
    const double scale = (1.0 + trace.rows[m + 1].grad_dual_norm) * row.step_norm;
    const double rel = std::abs(row.orth_residual) / scale;
    r.worst = std::max(r.worst, rel);
    if (rel > tol) ++r.violations;
  }
  r.passed = r.violations == 0;
  r.detail = "worst = max |<E'(u_{m+1}), z_m>| / ((1 + |E'(u_{m+1})|_*) |z_m|)";
  return r;
}

CheckReport check_telescoping(const GreedyTrace& trace, double alpha, double s) {
  CheckReport r = named_check("telescoping");
  const double slack = energy_slack(trace);
  const auto& rows = trace.rows;
  if (rows.empty()) return r;
  const double e_end = rows.back().energy;
  double suffix = 0.0;
  for (std::size_t l = rows.size(); l-- > 0;) {
    suffix += std::pow(rows[l].step_norm, s);
    const double bound = (s / alpha) * (rows[l].energy - e_end);
    ++r.checked;
    if (bound > 0.0) r.worst = std::max(r.worst, suffix / bound);
    if (suffix > bound + (s / alpha) * slack) ++r.violations;
  }
  r.passed = r.violations == 0;
  r.detail = "worst = max_l sum_{m>=l} |z_m|^s / ((s/alpha)(E(u_l) - E(u_M)))";
  return r;
}

CheckReport check_iterate_error(const GreedyTrace& trace, double alpha, double s, double eps) {
  CheckReport r = named_check("iterate_error");
  if (std::isnan(trace.reference_energy)) {
    r.applicable = false;
    r.detail = "no reference minimizer";
    return r;
  }
  const double pre = std::pow(s / alpha, 1.0 / s);
  for (const auto& row : trace.rows) {
    ++r.checked;
    // the gap is only resolved to a few ulps of the energies involved
    const double resolution =
        4.0 * std::numeric_limits<double>::epsilon() * (std::abs(row.energy) + std::abs(trace.reference_energy));
    const double bound = pre * std::pow(std::max(row.gap, 0.0) + resolution, 1.0 / s) * (1.0 + eps);
    if (bound > 0.0) r.worst = std::max(r.worst, row.error_norm / bound);
    if (row.error_norm > bound) ++r.violations;
  }
  r.passed = r.violations == 0;
  r.detail = "worst = max_m |u_m - u*| / bound_m";
  return r;
}

CheckReport check_boundedness(const GreedyTrace& trace, double radius) {
  CheckReport r = named_check("boundedness");
  for (const auto& row : trace.rows) {
    ++r.checked;
    r.worst = std::max(r.worst, row.iterate_norm);
    if (row.iterate_norm > radius * (1.0 + 1e-9)) ++r.violations;
  }
  r.passed = r.violations == 0;
  r.detail = "worst = max_m |u_m|, radius " + std::to_string(radius);
  return r;
}

}  // namespace dictdescent
