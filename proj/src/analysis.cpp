#include "dictdescent/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dictdescent/errors.hpp"
#include "dictdescent/stats.hpp"

namespace dictdescent {

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError(std::string(what) + " must be positive");
}

// rounding resolution of a gap computed as E(u_m) - E(u*)
double gap_resolution(const IterationRecord& row, double e_star) {
  return 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(row.energy) + std::abs(e_star));
}

}  // namespace

double beta_global(double p, double lip) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("p must lie in (0, 1]");
  require_positive(lip, "L");
  return p / ((p + 1.0) * std::pow(lip, 1.0 / p));
}

double beta_local(double p, double r, double m_r, double lip_2r) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("p must lie in (0, 1]");
  require_positive(r, "r");
  require_positive(m_r, "M_r");
  require_positive(lip_2r, "L_2r");
  return p / (p + 1.0) *
         std::min(r / std::pow(m_r, 1.0 / p), 1.0 / std::pow(lip_2r, 1.0 / p));
}

double gradient_bound_on_ball(double grad0_dual, double r, double lip_r) {
  return 1.0 + grad0_dual + r * lip_r;
}

GapSigmaConstant gap_sigma_constant(double p, double s, double lip, double alpha, double c_k) {
  require_positive(p, "p");
  require_positive(lip, "L");
  require_positive(alpha, "alpha");
  require_positive(c_k, "C_K");
  if (!(s > 1.0)) throw ParameterError("s must be > 1");
  const double e = (p + 1.0) / (s - 1.0);
  return {lip * std::pow(c_k, e) / ((p + 1.0) * std::pow(alpha, e)), e};
}

double exponential_factor(double p, double lip, double c_gap) {
  require_positive(p, "p");
  require_positive(lip, "L");
  require_positive(c_gap, "c");
  const double mu = p / (c_gap * (p + 1.0) * std::pow(lip, 1.0 / p));
  return std::min(mu, 1.0);
}

SequenceBound sequence_bound(double a1, double c1, double t, int count) {
  if (!(t > 1.0)) throw ParameterError("t must be > 1");
  require_positive(c1, "C1");
  if (!(a1 >= 0.0)) throw ParameterError("a1 must be non-negative");
  if (count < 1) throw ParameterError("sequence length must be positive");
  SequenceBound out;
  const double k = 1.0 / (t - 1.0);
  out.c2 = std::max(a1, std::pow((t - 1.0) * c1, -k));
  double a = a1;
  for (int m = 1; m <= count; ++m) {
    out.sequence.push_back(a);
    const double b = out.c2 * std::pow(static_cast<double>(m), -k);
    out.bound.push_back(b);
    if (a > b * (1.0 + 1e-12)) ++out.violations;
    if (a == 0.0) continue;
    const double next = a - c1 * std::pow(a, t);
    if (!(next > 0.0)) {
      out.truncated = true;
      break;
    }
    a = next;
  }
  out.passed = out.violations == 0;
  return out;
}

const char* to_string(RateKind k) {
  switch (k) {
    case RateKind::exponential: return "exponential";
    case RateKind::algebraic: return "algebraic";
    case RateKind::undetermined: return "undetermined";
  }
  return "?";
}

RatePrediction predicted_rate(double p, double s) {
  if (s < p + 1.0 - 1e-9)
    throw InconsistentAssumptions("s < p + 1 contradicts the exponent relation s >= p + 1");
  if (std::abs(s - (p + 1.0)) <= 1e-9) return {RateKind::exponential, 0.0};
  return {RateKind::algebraic, p / (s - 1.0 - p)};
}

double default_floor(std::span<const double> gaps) {
  return gaps.empty() ? 0.0 : 1e-13 * gaps.front();
}

RateReport fit_rate(std::span<const double> gaps, int burn_in, double floor) {
  RateReport r;
  r.burn_in = std::max(burn_in, 0);
  const int n = static_cast<int>(gaps.size());
  int end = n;
  for (int m = 0; m < n; ++m)
    if (!(gaps[static_cast<std::size_t>(m)] > floor) || !(gaps[static_cast<std::size_t>(m)] > 0.0)) {
      end = m;
      break;
    }
  r.floor_index = end;
  const int start = std::max(r.burn_in, 1);  // log m needs m >= 1
  r.window = std::max(0, end - start);
  if (r.window < 10) return r;

  std::vector<double> m, logm, logg;
  for (int k = start; k < end; ++k) {
    m.push_back(static_cast<double>(k));
    logm.push_back(std::log(static_cast<double>(k)));
    logg.push_back(std::log(gaps[static_cast<std::size_t>(k)]));
  }
  const LinearFit fe = linear_fit(m, logg);
  const LinearFit fa = linear_fit(logm, logg);
  r.r_squared_exponential = fe.r_squared;
  r.r_squared_algebraic = fa.r_squared;
  r.fitted_alpha = std::exp(fe.slope);
  r.fitted_exponent = -fa.slope;
  r.intercept_exponential = fe.intercept;
  r.intercept_algebraic = fa.intercept;
  if (std::abs(fe.r_squared - fa.r_squared) < 0.02) {
    r.kind = RateKind::undetermined;
    r.r_squared = std::max(fe.r_squared, fa.r_squared);
  } else if (fe.r_squared > fa.r_squared) {
    r.kind = RateKind::exponential;
    r.r_squared = fe.r_squared;
  } else {
    r.kind = RateKind::algebraic;
    r.r_squared = fa.r_squared;
  }
  return r;
}

void judge_rate(RateReport& report, const RatePrediction& prediction, double r2_exponential,
                double r2_algebraic) {
  report.predicted = prediction;
  report.pass_defined = report.window >= 10;
  if (!report.pass_defined) {
    report.pass = false;
    return;
  }
  if (prediction.kind == RateKind::exponential) {
    report.pass = report.kind == RateKind::exponential && report.r_squared >= r2_exponential &&
                  report.fitted_alpha < 1.0;
  } else {
    const bool alg = report.kind == RateKind::algebraic &&
                     report.fitted_exponent >= 0.9 * prediction.exponent;
    const bool faster = report.kind == RateKind::exponential && report.fitted_alpha < 1.0;
    report.pass = (alg || faster) && report.r_squared >= r2_algebraic;
  }
}

namespace {
CheckReport named(const char* name) {
  CheckReport r;
  r.name = name;
  return r;
}
}  // namespace

CheckReport check_gap_sigma(const GreedyTrace& trace, const GapSigmaConstant& gc) {
  CheckReport r = named("gap_sigma");
  if (std::isnan(trace.reference_energy)) {
    r.applicable = false;
    r.detail = "no reference minimizer";
    return r;
  }
  for (const auto& row : trace.rows) {
    ++r.checked;
    const double bound = gc.c * std::pow(row.sigma, gc.exponent);
    const double allowed = bound * (1.0 + 1e-9) + gap_resolution(row, trace.reference_energy);
    if (bound > 0.0) r.worst = std::max(r.worst, row.gap / bound);
    if (row.gap > allowed) ++r.violations;
  }
  r.passed = r.violations == 0;
  r.detail = "worst = max_m gap_m / (c sigma_m^e)";
  return r;
}

CheckReport check_exponential_envelope(const GreedyTrace& trace, double mu) {
  CheckReport r = named("exponential_envelope");
  if (std::isnan(trace.reference_energy) || trace.rows.empty()) {
    r.applicable = false;
    r.detail = "no reference minimizer";
    return r;
  }
  const double g0 = trace.rows.front().gap;
  for (const auto& row : trace.rows) {
    ++r.checked;
    const double bound = g0 * std::pow(1.0 - mu, static_cast<double>(row.m));
    const double allowed = bound * (1.0 + 1e-9) + gap_resolution(row, trace.reference_energy);
    if (bound > 0.0) r.worst = std::max(r.worst, row.gap / bound);
    if (row.gap > allowed) ++r.violations;
  }
  r.passed = r.violations == 0;
  r.detail = "worst = max_m gap_m / (gap_0 (1 - mu)^m)";
  return r;
}

CheckReport check_algebraic_envelope(const GreedyTrace& trace, double beta,
                                     const GapSigmaConstant& gc, double p, double s) {
  CheckReport r = named("algebraic_envelope");
  if (std::isnan(trace.reference_energy) || trace.rows.size() < 2 ||
      std::abs(s - (p + 1.0)) <= 1e-9) {
    r.applicable = false;
    r.detail = "needs s > p + 1 and a reference minimizer";
    return r;
  }
  const double t = (s - 1.0) / p;
  const double c1 = beta / std::pow(gc.c, t);
  const double k = 1.0 / (t - 1.0);
  const double c2 = std::max(trace.rows[1].gap, std::pow((t - 1.0) * c1, -k));
  for (std::size_t m = 1; m < trace.rows.size(); ++m) {
    const auto& row = trace.rows[m];
    ++r.checked;
    const double bound = c2 * std::pow(static_cast<double>(m), -k);
    r.worst = std::max(r.worst, row.gap / bound);
    if (row.gap > bound * (1.0 + 1e-9) + gap_resolution(row, trace.reference_energy)) ++r.violations;
  }
  r.passed = r.violations == 0;
  r.detail = "worst = max_m gap_m / (C2 m^(-p/(s-1-p)))";
  return r;
}

}  // namespace dictdescent
