#pragma once

#include <span>
#include <vector>

#include "dictdescent/greedy.hpp"

namespace dictdescent {

// p / ((p+1) L^(1/p))
double beta_global(double p, double lip);
// p/(p+1) * min{ r / M_r^(1/p), 1 / L_2r^(1/p) }
double beta_local(double p, double r, double m_r, double lip_2r);
// 1 + |E'(0)|_* + r L_r, the bound used for M_r
double gradient_bound_on_ball(double grad0_dual, double r, double lip_r);

struct GapSigmaConstant {
  double c = 0.0;
  double exponent = 0.0;  // (p+1)/(s-1); equals 1 + 1/p when s = p + 1
};

// gap <= c sigma^e with c = L C^e / ((p+1) alpha^e)
GapSigmaConstant gap_sigma_constant(double p, double s, double lip, double alpha, double c_k);

// mu = p / (c (p+1) L^(1/p)) clamped to (0, 1]
double exponential_factor(double p, double lip, double c_gap);

struct SequenceBound {
  std::vector<double> sequence;  // a_1 .. a_M (shorter when truncated)
  std::vector<double> bound;     // C2 m^(-1/(t-1))
  double c2 = 0.0;
  int violations = 0;
  bool truncated = false;
  bool passed = false;
};

SequenceBound sequence_bound(double a1, double c1, double t, int count);

enum class RateKind { exponential, algebraic, undetermined };
const char* to_string(RateKind k);

struct RatePrediction {
  RateKind kind = RateKind::exponential;
  double exponent = 0.0;  // algebraic only
};

RatePrediction predicted_rate(double p, double s);

struct RateReport {
  RateKind kind = RateKind::undetermined;
  double fitted_alpha = 0.0;     // exp(slope) of log gap vs m
  double fitted_exponent = 0.0;  // -slope of log gap vs log m
  double r_squared = 0.0;        // of the selected model
  double r_squared_exponential = 0.0;
  double r_squared_algebraic = 0.0;
  double intercept_exponential = 0.0;  // of log gap vs m
  double intercept_algebraic = 0.0;    // of log gap vs log m
  int burn_in = 5;
  int floor_index = 0;  // first index at or below the floor (exclusive end)
  int window = 0;
  RatePrediction predicted;
  bool pass_defined = false;
  bool pass = false;
};

double default_floor(std::span<const double> gaps);

RateReport fit_rate(std::span<const double> gaps, int burn_in, double floor);

// pass rule: exponential prediction needs an exponential fit with
// r^2 >= r2_exponential; algebraic prediction passes on an algebraic fit with
// exponent >= 0.9 * predicted or any exponential fit (faster decay), both with
// r^2 >= r2_algebraic
void judge_rate(RateReport& report, const RatePrediction& prediction,
                double r2_exponential = 0.99, double r2_algebraic = 0.95);

// gap_m <= c sigma_m^e
CheckReport check_gap_sigma(const GreedyTrace& trace, const GapSigmaConstant& gc);
// gap_m <= gap_0 (1 - mu)^m
CheckReport check_exponential_envelope(const GreedyTrace& trace, double mu);
// gap_m <= C2 m^(-p/(s-1-p)) for m >= 1 with C2 from the sequence lemma
CheckReport check_algebraic_envelope(const GreedyTrace& trace, double beta,
                                     const GapSigmaConstant& gc, double p, double s);

}  // namespace dictdescent
