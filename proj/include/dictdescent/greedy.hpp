#pragma once

#include <string>
#include <vector>

#include "dictdescent/dictionary.hpp"
#include "dictdescent/energy.hpp"

namespace dictdescent {

enum class GreedyMode { sigma_line, exact_union };
enum class Termination { sigma_stop, flat_step, max_iter };

const char* to_string(GreedyMode mode);
const char* to_string(Termination t);

struct GreedyConfig {
  GreedyMode mode = GreedyMode::sigma_line;
  int max_iter = 1000;
  double sigma_stop = 1e-12;
  double line_tol = 2e-16;  // relative bracket width
  double bracket_growth = 2.0;
  double ball_radius_r = 0.0;  // <= 0: use the coercivity radius
  void validate() const;
};

struct LineResult {
  double t = 0.0;
  double value = 0.0;
};

// minimizes t -> E(u + t w); closed form when the energy provides one
LineResult line_minimize(const Energy& energy, const SpaceVector& u, const SpaceVector& w,
                         double tol, double growth = 2.0);

// One row per iterate u_m. The step fields describe z = u_{m+1} - u_m and are
// zero on the terminal row.
struct IterationRecord {
  int m = 0;
  double energy = 0.0;
  double gap = 0.0;           // NaN when u* is unknown
  double sigma = 0.0;
  double step_norm = 0.0;
  double orth_residual = 0.0; // <E'(u_{m+1}), z>
  double cum_step_s = 0.0;    // sum_{k <= m} |z_k|^s
  double grad_dual_norm = 0.0;
  double iterate_norm = 0.0;
  double error_norm = 0.0;    // |u_m - u*|, NaN when u* is unknown
};

struct GreedyTrace {
  std::vector<IterationRecord> rows;
  SpaceVector final_iterate;
  Termination reason = Termination::max_iter;
  double s = 2.0;
  double reference_energy = 0.0;  // E(u*), NaN when unknown
};

struct StepResult {
  SpaceVector u_next;
  double sigma = 0.0;
  double step_norm = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
};

StepResult greedy_step(const Energy& energy, const Dictionary& dict, const SpaceVector& u,
                       const GreedyConfig& config);

GreedyTrace run_greedy(const Energy& energy, const Dictionary& dict, const GreedyConfig& config);

struct CheckReport {
  std::string name;
  bool passed = true;
  bool applicable = true;
  int checked = 0;
  int violations = 0;
  double worst = 0.0;  // check-specific: largest normalized excess or ratio
  std::string detail;
};

// slack used by the energy-level checks: 1e-10 (|E(u_0)| + |E(u_M)|)
double energy_slack(const GreedyTrace& trace);

CheckReport check_monotone(const GreedyTrace& trace);
CheckReport check_one_step_bound(const GreedyTrace& trace, double beta, double p);
CheckReport check_orthogonality(const GreedyTrace& trace, double tol);
CheckReport check_telescoping(const GreedyTrace& trace, double alpha, double s);
CheckReport check_iterate_error(const GreedyTrace& trace, double alpha, double s, double eps);
CheckReport check_boundedness(const GreedyTrace& trace, double radius);

}  // namespace dictdescent
