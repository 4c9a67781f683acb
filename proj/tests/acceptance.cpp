// Acceptance suite: one line per criterion, exit status 1 if any fails.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dictdescent/analysis.hpp"
#include "dictdescent/config.hpp"
#include "dictdescent/dictionary.hpp"
#include "dictdescent/energy.hpp"
#include "dictdescent/experiment.hpp"
#include "dictdescent/io.hpp"
#include "dictdescent/rng.hpp"

using namespace dictdescent;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

SpaceVector vec(const SpacePtr& s, std::vector<double> c) { return SpaceVector(s, std::move(c)); }

fs::path find_configs() {
  for (fs::path p : {fs::path("configs"), fs::path(DICTDESCENT_SOURCE_DIR) / "configs"})
    if (fs::is_directory(p)) return p;
  return "configs";
}

std::vector<fs::path> bundled_configs() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(find_configs()))
    if (e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// every bundled config, run once and shared by the trace criteria
std::map<std::string, RunResult>& bundled_runs() {
  static std::map<std::string, RunResult> runs = [] {
    std::map<std::string, RunResult> m;
    for (const auto& path : bundled_configs()) {
      const auto cfg = load_config(path);
      m.emplace(cfg.name, run_experiment(cfg));
    }
    return m;
  }();
  return runs;
}

// ------------------------------------------------------------------ 1

Outcome gradients() {
  Outcome o;
  Rng rng(101);
  struct Case {
    std::string name;
    EnergyPtr energy;
    double tol;
  };
  std::vector<Case> cases;
  const std::size_t n = 16;
  {
    const auto s = grid_space(n, 2.0);
    cases.push_back({"quadratic", quadratic_energy(dirichlet_laplacian(n), vec(s, rng.normals(n))), 1e-8});
  }
  for (double p : {0.5, 1.0}) {
    const auto s = Space::uniform(n, p + 1, 1.0 / n);
    cases.push_back({"power p=" + fmt("%g", p), power_energy(vec(s, rng.normals(n)), p), 1e-6});
  }
  for (double q : {2.0, 3.0}) {
    const auto s = grid_space(n, q);
    cases.push_back({"plaplacian q=" + fmt("%g", q), plaplacian_energy(n, q, vec(s, rng.normals(n))), 1e-6});
  }
  const double h = 1e-6;
  for (const auto& c : cases) {
    double worst = 0.0;
    int flagged = 0;
    for (int k = 0; k < 100; ++k) {
      const auto x = vec(c.energy->space(), rng.normals(n));
      if (c.energy->near_kink(x, h)) {
        ++flagged;
        continue;
      }
      worst = std::max(worst, check_gradient(*c.energy, x, h));
    }
    if (!(worst <= c.tol)) o.pass = false;
    o.detail += c.name + " " + fmt("%.2e", worst) + (flagged ? " (" + std::to_string(flagged) + " kink-flagged)" : "") + "; ";
  }
  return o;
}

// ------------------------------------------------------------------ 2

Outcome exponent_relations() {
  Outcome o;
  Rng rng(202);
  const std::size_t n = 16;
  std::vector<std::pair<std::string, EnergyPtr>> energies;
  {
    const auto s = grid_space(n, 2.0);
    energies.push_back({"laplacian", quadratic_energy(dirichlet_laplacian(n), vec(s, rng.normals(n)))});
  }
  for (double p : {0.5, 1.0}) {
    const auto s = Space::uniform(n, p + 1, 1.0 / n);
    energies.push_back({"power p=" + fmt("%g", p), power_energy(vec(s, rng.normals(n)), p)});
  }
  for (double q : {2.0, 3.0}) {
    const auto s = grid_space(n, q);
    energies.push_back({"plaplacian q=" + fmt("%g", q), plaplacian_energy(n, q, vec(s, rng.normals(n)))});
  }
  for (const auto& [name, e] : energies) {
    const double r = default_region_radius(*e);
    const double p = estimate_smoothness(*e, r, 500, 7).exponent;
    const double s = estimate_ellipticity(*e, r, 500, 8).exponent;
    bool ok = s >= p + 0.9;
    const bool global = e->params().mode == SmoothnessMode::global;
    if (global) ok = ok && std::abs(s - (p + 1)) <= 0.1;
    if (!ok) o.pass = false;
    o.detail += name + (global ? " [global]" : " [bounded]") + " p^=" + fmt("%.3f", p) + " s^=" + fmt("%.3f", s) + "; ";
  }
  return o;
}

// ------------------------------------------------------------------ 3

Outcome power_constant() {
  Outcome o;
  const std::size_t n = 64;
  for (double p : {0.5, 1.0}) {
    Rng rng(300 + static_cast<int>(10 * p));
    const auto s = Space::uniform(n, p + 1, 1.0 / n);
    const auto e = power_energy(vec(s, rng.normals(n)), p);
    const double c = std::pow(1 + std::pow(2.0, 1 / p), p / (p + 1));
    int violations = 0;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      auto f = vec(s, rng.normals(n)), g = vec(s, rng.normals(n));
      // mix scales so some pairs are close together
      g = f + std::pow(10.0, -rng.uniform(0, 4)) * (g - f);
      const double lhs = dual_norm(e->gradient(f) - e->gradient(g));
      const double rhs = c * std::pow(norm(f - g), p);
      worst = std::max(worst, lhs / rhs);
      if (lhs > rhs) ++violations;
    }
    if (violations) o.pass = false;
    o.detail += "p=" + fmt("%g", p) + " violations " + std::to_string(violations) + " worst ratio " + fmt("%.4f", worst) + "; ";
  }
  return o;
}

// --------------------------------------------------------- trace criteria

struct Scan {
  int violations = 0;
  double worst = 0.0;
};

double slack_of(const GreedyTrace& t) {
  return 1e-10 * (std::abs(t.rows.front().energy) + std::abs(t.rows.back().energy));
}

Scan one_step_scan(const RunResult& r) {
  Scan sc;
  sc.worst = -std::numeric_limits<double>::infinity();
  const auto& rows = r.trace.rows;
  const double expo = 1 + 1 / r.constants.p;
  for (std::size_t m = 0; m + 1 < rows.size(); ++m) {
    const double excess = rows[m + 1].energy - (rows[m].energy - r.constants.beta * std::pow(rows[m].sigma, expo));
    sc.worst = std::max(sc.worst, excess);
    if (excess > slack_of(r.trace)) ++sc.violations;
  }
  return sc;
}

Outcome one_step() {
  Outcome o;
  int total = 0;
  for (const auto& [name, r] : bundled_runs()) {
    const auto sc = one_step_scan(r);
    total += sc.violations;
    if (sc.violations) o.detail += name + " " + std::to_string(sc.violations) + " violations; ";
  }
  const auto& q = bundled_runs().at("quadratic_axes").trace.rows;
  const double tight = std::abs(q[1].gap - (12.5 - 0.5 * 16.0));
  if (total || tight > 1e-10) o.pass = false;
  o.detail += std::to_string(bundled_runs().size()) + " runs, violations " + std::to_string(total) +
              "; quadratic axes gap_1 = " + fmt("%.17g", q[1].gap) + " vs 4.5";
  return o;
}

Outcome orthogonality() {
  Outcome o;
  int steps = 0, violations = 0;
  double worst = 0.0;
  for (const auto& [name, r] : bundled_runs()) {
    const auto& rows = r.trace.rows;
    for (std::size_t m = 0; m + 1 < rows.size(); ++m) {
      if (rows[m].step_norm == 0.0) continue;
      ++steps;
      const double scale = (1 + rows[m + 1].grad_dual_norm) * rows[m].step_norm;
      const double rel = std::abs(rows[m].orth_residual) / scale;
      worst = std::max(worst, rel);
      if (rel > 1e-8) ++violations;
    }
  }
  o.pass = violations == 0;
  o.detail = std::to_string(steps) + " steps, violations " + std::to_string(violations) + ", worst " + fmt("%.2e", worst);
  return o;
}

Outcome telescoping() {
  Outcome o;
  int violations = 0;
  for (const auto& [name, r] : bundled_runs()) {
    const auto& rows = r.trace.rows;
    const double s = r.constants.s, a = r.constants.alpha;
    double suffix = 0.0;
    for (std::size_t l = rows.size(); l-- > 0;) {
      suffix += std::pow(rows[l].step_norm, s);
      if (suffix > (s / a) * (rows[l].energy - rows.back().energy + slack_of(r.trace))) ++violations;
    }
    o.detail += name + " alpha " + fmt("%.4g", a) + " (" + r.constants.alpha_source + "); ";
  }
  const auto& q = bundled_runs().at("quadratic_axes").trace.rows;
  const double ratio = (16.0 + 9.0) / (2.0 / 1.0 * (q[0].energy - q.back().energy));
  o.pass = violations == 0 && ratio >= 0.99;
  o.detail = "violations " + std::to_string(violations) + ", quadratic axes ratio " + fmt("%.6f", ratio) + "; " + o.detail;
  return o;
}

// ------------------------------------------------------------------ 7

Outcome norming() {
  Outcome o;
  bool ok = true;
  {  // (a) the neural feature dictionary of the bundled neural_exact config
    const auto cfg = load_config(find_configs() / "neural_exact.json");
    const auto d = build_dictionary(cfg, build_space(cfg));
    const auto& data = std::get<FiniteAtomData>(d.data());
    const double c = std::sqrt(static_cast<double>(data.atoms.size())) / data.sigma_min;
    const auto rep = verify_norming(d, c, 10000, 701);
    ok = ok && rep.violations == 0 && rep.trials == 10000;
    o.detail += "(a) m " + std::to_string(data.atoms.size()) + " C " + fmt("%.3f", c) + " worst ratio " +
                fmt("%.3f", rep.worst_ratio) + " violations " + std::to_string(rep.violations) + "; ";
  }
  {  // (b)
    int violations = 0;
    for (double c : {0.3, 0.5, 0.7})
      for (double q : {1.5, 2.0, 3.0}) {
        const auto s = Space::uniform(6, q, 1.0 / 6);
        const double cc = 1 / std::min(c, std::pow(1 - std::pow(c, q), 1 / q));
        const auto rep = verify_norming(Dictionary::cone(s, c), cc, 10000, 702);
        violations += rep.violations;
        ok = ok && rep.passed;
      }
    ok = ok && violations == 0;
    o.detail += "(b) 9 cones violations " + std::to_string(violations) + "; ";
  }
  {  // (c)
    int violations = 0;
    const std::vector<std::vector<std::vector<std::size_t>>> splits{
        {{0, 1, 2}, {3, 4, 5}}, {{0, 1}, {2, 3}, {4, 5}}, {{0}, {1, 2}, {3}, {4, 5}}};
    for (double q : {1.5, 2.0, 3.0})
      for (const auto& blocks : splits) {
        const auto s = Space::create({0.5, 1.0, 1.5, 0.7, 1.2, 0.9}, q);
        const auto rep = verify_norming(Dictionary::subspaces(s, coordinate_blocks(s, blocks)),
                                        static_cast<double>(blocks.size()), 10000, 703);
        violations += rep.violations;
        ok = ok && rep.passed;
      }
    ok = ok && violations == 0;
    o.detail += "(c) violations " + std::to_string(violations) + "; ";
  }
  {  // (d)
    const auto s = Space::create({0.5, 1.0, 1.5, 0.7}, 1.7);
    const std::vector<Dictionary> dicts{
        Dictionary::finite_atoms(s, make_finite_atoms(s, {{1, 0.5, 0, 0}, {0, 1, -0.3, 0}, {0.2, 0, 1, 0.4}, {0, 0, 0.1, 1}})),
        Dictionary::cone(s, 0.5), Dictionary::subspaces(s, coordinate_blocks(s, {{0, 1}, {2, 3}})),
        Dictionary::full_space(s)};
    Rng rng(704);
    double worst = 0.0;
    for (const auto& d : dicts)
      for (int k = 0; k < 10; ++k) {
        const auto phi = vec(s, rng.normals(4));
        const double sig = sigma_witness(d, phi).sigma;
        const double brute = brute_force_sup(d, phi, 20000, rng.next()).best;
        worst = std::max(worst, std::abs(brute / sig - 1));
      }
    ok = ok && worst <= 0.01;
    o.detail += "(d) max relative disagreement " + fmt("%.2e", worst);
  }
  o.pass = ok;
  return o;
}

// ------------------------------------------------------------------ 8

Outcome exponential_rate() {
  Outcome o;
  for (const char* name : {"laplacian_full", "laplacian_axes"}) {
    const auto& r = bundled_runs().at(name);
    const auto& rows = r.trace.rows;
    const bool kind = r.rate.kind == RateKind::exponential && r.rate.r_squared >= 0.99;
    const double mu = 1 - r.predicted_factor;
    int violations = 0;
    for (const auto& row : rows)
      if (row.gap > rows[0].gap * std::pow(1 - mu, row.m) + slack_of(r.trace)) ++violations;
    if (!kind || violations || !(mu > 0)) o.pass = false;
    o.detail += std::string(name) + " n " + std::to_string(r.trace.final_iterate.size()) + " " + to_string(r.rate.kind) +
                " r2 " + fmt("%.5f", r.rate.r_squared) + " rate " + fmt("%.6f", r.rate.fitted_alpha) +
                " window " + std::to_string(r.rate.window) + " mu " + fmt("%.3e", mu) + " envelope violations " +
                std::to_string(violations) + "; ";
  }
  return o;
}

// ------------------------------------------------------------------ 9

Outcome algebraic_rate() {
  Outcome o;
  const auto& r = bundled_runs().at("plaplacian_axes");
  const double p = r.smoothness.exponent, s = r.ellipticity.exponent;
  const auto pred = predicted_rate(p, s);
  auto rep = r.rate;
  judge_rate(rep, pred);
  const bool alg_ok = rep.r_squared_algebraic >= 0.95 && rep.fitted_exponent >= 0.9 * pred.exponent;
  const bool faster = rep.kind == RateKind::exponential && rep.fitted_alpha < 1 && rep.r_squared >= 0.95;
  o.pass = pred.kind == RateKind::algebraic && std::abs(pred.exponent - 1) <= 0.2 && (alg_ok || faster) && rep.pass;
  o.detail = "n " + std::to_string(r.trace.final_iterate.size()) + " p^ " + fmt("%.3f", p) + " s^ " + fmt("%.3f", s) +
             " predicted exponent " + fmt("%.3f", pred.exponent) + "; algebraic fit exponent " +
             fmt("%.3f", rep.fitted_exponent) + " r2 " + fmt("%.3f", rep.r_squared_algebraic) +
             "; exponential fit rate " + fmt("%.5f", rep.fitted_alpha) + " r2 " + fmt("%.4f", rep.r_squared_exponential) +
             "; selected " + to_string(rep.kind) + (alg_ok ? " (algebraic bound met)" : faster ? " (faster than predicted)" : "");
  return o;
}

// ----------------------------------------------------------------- 10

Outcome sequence_lemma() {
  Outcome o;
  int violations = 0;
  bool full = true;
  for (double t : {1.5, 2.0, 3.0})
    for (double c1 : {0.1, 0.5})
      for (double a1 : {0.1, 1.0}) {
        const auto r = sequence_bound(a1, c1, t, 10000);
        violations += r.violations;
        full = full && r.sequence.size() == 10000u && r.passed;
      }
  const auto first = sequence_bound(1.0, 0.5, 2.0, 4).sequence;
  const bool exact = first == std::vector<double>{1, 0.5, 0.375, 0.3046875};
  o.pass = violations == 0 && full && exact;
  o.detail = "12 grid cases, violations " + std::to_string(violations) + ", first terms " +
             (exact ? "exact" : "wrong");
  return o;
}

// ----------------------------------------------------------------- 11

Outcome iterate_error() {
  Outcome o;
  int checked = 0, violations = 0;
  for (const auto& [name, r] : bundled_runs()) {
    if (std::isnan(r.trace.reference_energy)) continue;
    const double s = r.constants.s, pre = std::pow(s / r.constants.alpha, 1 / s);
    for (const auto& row : r.trace.rows) {
      ++checked;
      const double res = 4 * std::numeric_limits<double>::epsilon() *
                         (std::abs(row.energy) + std::abs(r.trace.reference_energy));
      if (row.error_norm > pre * std::pow(std::max(row.gap, 0.0) + res, 1 / s) * 1.01) ++violations;
    }
  }
  const auto& q = bundled_runs().at("quadratic_axes").trace.rows;
  const double bound = std::sqrt(2.0 * q[1].gap);
  const bool eq = std::abs(bound - 3) <= 1e-9 && std::abs(q[1].error_norm - 3) <= 1e-9;
  o.pass = violations == 0 && eq;
  o.detail = std::to_string(checked) + " iterates, violations " + std::to_string(violations) +
             "; quadratic axes m=1 bound " + fmt("%.17g", bound) + " actual " + fmt("%.17g", q[1].error_norm);
  return o;
}

// ----------------------------------------------------------------- 12

Outcome determinism() {
  Outcome o;
  const auto base = fs::temp_directory_path() / ("dictdescent_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  int files = 0, mismatches = 0;
  for (const auto& cfg : bundled_configs()) {
    std::ostringstream sink;
    cmd_run(cfg, base / "a", sink, sink);
    cmd_run(cfg, base / "b", sink, sink);
  }
  for (const auto& e : fs::directory_iterator(base / "a")) {
    ++files;
    const auto other = base / "b" / e.path().filename();
    if (!fs::exists(other) || read_text_file(e.path()) != read_text_file(other)) {
      ++mismatches;
      o.detail += e.path().filename().string() + " differs; ";
    }
  }
  fs::remove_all(base);
  o.pass = mismatches == 0 && files >= 2 * static_cast<int>(bundled_configs().size());
  o.detail += std::to_string(bundled_configs().size()) + " configs, " + std::to_string(files) + " files compared";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"exponent relations", exponent_relations},
      {"power energy Hoelder constant", power_constant},
      {"one-step bound", one_step},
      {"orthogonality", orthogonality},
      {"telescoping", telescoping},
      {"norming constants", norming},
      {"exponential rate (s = p + 1)", exponential_rate},
      {"algebraic rate (s > p + 1)", algebraic_rate},
      {"sequence lemma", sequence_lemma},
      {"iterate error", iterate_error},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.pass) ++failed;
    std::printf("criterion %2zu %s: %s [%.1fs] %s\n", k + 1, out.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
