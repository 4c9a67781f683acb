#include "dictdescent/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "dictdescent/errors.hpp"

namespace dictdescent {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

CheckReport make_check(std::string name) {
  CheckReport r;
  r.name = std::move(name);
  return r;
}

CheckReport not_applicable(std::string name, std::string why) {
  CheckReport r = make_check(std::move(name));
  r.applicable = false;
  r.detail = std::move(why);
  return r;
}

CheckReport exponent_relation_check(double p_hat, double s_hat, SmoothnessMode mode) {
  CheckReport r = make_check("exponent_relation");
  r.checked = 1;
  r.worst = s_hat - p_hat;
  bool ok = s_hat >= p_hat + 0.9;
  std::string detail = "s_hat - p_hat = " + format17(s_hat - p_hat) + " (needs >= 0.9";
  if (mode == SmoothnessMode::global) {
    ok = ok && std::abs(s_hat - p_hat - 1.0) <= 0.1;
    detail += " and within 0.1 of 1 for a global-mode energy";
  }
  r.detail = detail + ")";
  r.violations = ok ? 0 : 1;
  r.passed = ok;
  return r;
}

Json check_json(const CheckReport& c) {
  Json j;
  j["passed"] = c.passed;
  j["applicable"] = c.applicable;
  j["checked"] = c.checked;
  j["violations"] = c.violations;
  j["worst"] = c.worst;
  j["detail"] = c.detail;
  return j;
}

Json build_report(const ExperimentConfig& cfg, const Setup& setup, const RunResult& r) {
  Json report;
  report["config"] = cfg.raw;

  const auto& k = r.constants;
  Json est;
  est["region_radius"] = r.region_radius;
  est["samples"] = cfg.analysis.samples;
  est["p_hat"] = r.smoothness.exponent;
  est["lip_hat"] = r.smoothness.constant;
  est["smoothness_pairs"] = r.smoothness.used;
  est["smoothness_skipped"] = r.smoothness.skipped;
  est["s_hat"] = r.ellipticity.exponent;
  est["alpha_hat"] = r.ellipticity.constant;
  est["ellipticity_pairs"] = r.ellipticity.used;
  est["ellipticity_skipped"] = r.ellipticity.skipped;
  Json eff;
  eff["p"] = k.p;
  eff["s"] = k.s;
  eff["mode"] = to_string(k.mode);
  eff["lip"] = k.lip;
  eff["lip_source"] = k.lip_source;
  eff["alpha"] = k.alpha;
  eff["alpha_source"] = k.alpha_source;
  eff["ball_radius"] = k.ball_radius;
  eff["beta"] = k.beta;
  if (k.mode == SmoothnessMode::bounded) {
    eff["lip_r"] = k.lip_r;
    eff["lip_2r"] = k.lip_2r;
    eff["m_r"] = k.m_r;
  }
  est["effective"] = eff;
  Json ref;
  const auto& u_star = setup.energy->reference();
  ref["solver"] = setup.energy->reference_solver();
  ref["energy"] = r.trace.reference_energy;
  ref["norm"] = u_star ? norm(*u_star) : kNaN;
  est["reference"] = ref;
  report["estimates"] = est;

  Json nrm;
  nrm["dictionary"] = to_string(setup.dictionary.kind());
  nrm["constant"] = r.norming_constant.value;
  nrm["provenance"] = to_string(r.norming_constant.provenance);
  nrm["checked"] = r.norming_checked;
  nrm["trials"] = r.norming.trials;
  nrm["violations"] = r.norming.violations;
  nrm["worst_ratio"] = r.norming.worst_ratio;
  nrm["brute_checked"] = r.norming.brute_checked;
  nrm["brute_max_excess"] = r.norming.brute_max_excess;
  nrm["brute_max_shortfall"] = r.norming.brute_max_shortfall;
  nrm["passed"] = r.norming.passed;
  report["norming"] = nrm;

  Json checks = Json::object();
  for (const auto& c : r.checks) checks[c.name] = check_json(c);
  report["checks"] = checks;

  const auto& rr = r.rate;
  Json rate;
  rate["iterations"] = static_cast<int>(r.trace.rows.size()) - 1;
  rate["termination"] = to_string(r.trace.reason);
  rate["final_gap"] = r.trace.rows.empty() ? kNaN : r.trace.rows.back().gap;
  rate["kind"] = to_string(rr.kind);
  rate["fitted_alpha"] = rr.fitted_alpha;
  rate["fitted_exponent"] = rr.fitted_exponent;
  rate["r_squared"] = rr.r_squared;
  rate["r_squared_exponential"] = rr.r_squared_exponential;
  rate["r_squared_algebraic"] = rr.r_squared_algebraic;
  rate["burn_in"] = rr.burn_in;
  rate["floor"] = cfg.analysis.floor;
  rate["floor_index"] = rr.floor_index;
  rate["window"] = rr.window;
  rate["predicted_kind"] = to_string(rr.predicted.kind);
  rate["predicted_exponent"] = rr.predicted.exponent;
  rate["predicted_factor"] = r.predicted_factor;
  rate["pass_defined"] = rr.pass_defined;
  rate["pass"] = rr.pass;
  report["rate"] = rate;

  report["verdict"] = r.pass ? "pass" : "fail";
  return report;
}

}  // namespace

Setup build_setup(const ExperimentConfig& cfg) {
  SpacePtr space = build_space(cfg);
  EnergyPtr energy = build_energy(cfg, space);
  Dictionary dict = build_dictionary(cfg, space);
  return Setup{std::move(space), std::move(energy), std::move(dict)};
}

RunResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, build_setup(cfg)); }

RunResult run_experiment(const ExperimentConfig& cfg, const Setup& setup) {
  const Energy& energy = *setup.energy;
  const Dictionary& dict = setup.dictionary;
  const auto& an = cfg.analysis;
  const SmoothnessParams& built = energy.params();
  const SmoothnessParams sp = cfg.energy.declared.value_or(built);

  // 1. estimates
  const double region = an.region_radius > 0.0 ? an.region_radius : default_region_radius(energy);
  EstimateResult smooth = estimate_smoothness(energy, region, an.samples, an.seed);
  EstimateResult ellip = estimate_ellipticity(energy, region, an.samples, an.seed + 1);
  std::vector<CheckReport> checks;
  checks.push_back(exponent_relation_check(smooth.exponent, ellip.exponent, sp.mode));

  // 2. norming
  const NormingConstant nc = dict.norming();
  NormingReport nrep;
  bool norming_checked = false;
  if (std::isfinite(nc.value) && nc.value > 0.0) {
    nrep = verify_norming(dict, nc.value, an.trials, an.seed + 2);
    norming_checked = true;
    CheckReport c = make_check("norming");
    c.checked = nrep.trials;
    c.violations = nrep.violations;
    c.worst = nrep.worst_ratio;
    c.passed = nrep.passed;
    c.detail = "worst = max dual_norm / sigma over random functionals; C is " + std::string(to_string(nc.provenance));
    checks.push_back(c);
  } else {
    checks.push_back(not_applicable("norming", "no finite norming constant for this dictionary"));
  }

  // 3. greedy
  RunResult r(run_greedy(energy, dict, cfg.greedy));
  r.name = cfg.name;
  r.region_radius = region;
  r.smoothness = std::move(smooth);
  r.ellipticity = std::move(ellip);
  r.norming_constant = nc;
  r.norming = nrep;
  r.norming_checked = norming_checked;
  r.checks = std::move(checks);
  EffectiveConstants& k = r.constants;
  k.p = sp.p;
  k.s = sp.s;
  k.mode = sp.mode;
  const auto& rows = r.trace.rows;
  const bool have_ref = !std::isnan(r.trace.reference_energy);
  const double gap0 = rows.front().gap;

  // 4. effective constants
  const auto& decl = cfg.energy.declared;
  if (decl && decl->alpha) {
    k.alpha = *decl->alpha;
    k.alpha_source = "declared";
  } else if (built.alpha) {
    k.alpha = *built.alpha;
    k.alpha_source = "closed form";
  } else if (auto ca = energy.certified_alpha()) {
    k.alpha = *ca;
    k.alpha_source = "certified";
  } else {
    k.alpha = r.ellipticity.lower_envelope(k.s);
    k.alpha_source = "estimate";
  }

  if (cfg.greedy.ball_radius_r > 0.0) {
    k.ball_radius = cfg.greedy.ball_radius_r;
  } else if (have_ref && energy.reference()) {
    // E(u) - E(u*) >= (alpha / s) |u - u*|^s and the energy never increases
    k.ball_radius = norm(*energy.reference()) + std::pow(k.s / k.alpha * std::max(gap0, 0.0), 1.0 / k.s);
  } else {
    k.ball_radius = kInf;
  }

  if (k.mode == SmoothnessMode::global) {
    if (decl && decl->lip) {
      k.lip = *decl->lip;
      k.lip_source = "declared";
    } else if (built.lip) {
      k.lip = *built.lip;
      k.lip_source = "closed form";
    } else {
      k.lip = r.smoothness.upper_envelope(k.p);
      k.lip_source = "estimate";
    }
    k.beta = beta_global(k.p, k.lip);
  } else {
    const double rad = std::isfinite(k.ball_radius) ? k.ball_radius : r.region_radius;
    k.lip_r = estimate_smoothness(energy, rad, an.samples, an.seed + 3).upper_envelope(k.p);
    k.lip_2r = estimate_smoothness(energy, 2.0 * rad, an.samples, an.seed + 4).upper_envelope(k.p);
    if (decl && decl->lip) {
      k.lip_r = k.lip_2r = *decl->lip;
      k.lip_source = "declared";
    } else {
      k.lip_source = "estimate on the ball of radius 2r";
    }
    k.lip = k.lip_2r;
    const double g0 = dual_norm(energy.gradient(SpaceVector::zeros(setup.space)));
    k.m_r = gradient_bound_on_ball(g0, rad, k.lip_r);
    k.beta = beta_local(k.p, rad, k.m_r, k.lip_2r);
  }

  // 5. checks
  r.checks.push_back(check_monotone(r.trace));
  r.checks.push_back(check_one_step_bound(r.trace, k.beta, k.p));
  r.checks.push_back(check_orthogonality(r.trace, 1e-8));
  r.checks.push_back(check_telescoping(r.trace, k.alpha, k.s));
  r.checks.push_back(check_iterate_error(r.trace, k.alpha, k.s, 0.01));
  if (std::isfinite(k.ball_radius))
    r.checks.push_back(check_boundedness(r.trace, k.ball_radius));
  else
    r.checks.push_back(not_applicable("boundedness", "no coercivity radius without a reference minimizer"));

  r.predicted_factor = kNaN;
  const bool critical = std::abs(k.s - k.p - 1.0) <= 1e-9;
  const double c_k = r.norming_constant.value;
  if (have_ref && std::isfinite(c_k) && c_k > 0.0) {
    const GapSigmaConstant gc = gap_sigma_constant(k.p, k.s, k.lip, k.alpha, c_k);
    r.checks.push_back(check_gap_sigma(r.trace, gc));
    if (critical) {
      const double mu = exponential_factor(k.p, k.lip, gc.c);
      r.predicted_factor = 1.0 - mu;
      r.checks.push_back(check_exponential_envelope(r.trace, mu));
      r.checks.push_back(not_applicable("algebraic_envelope", "s = p + 1"));
    } else {
      r.checks.push_back(not_applicable("exponential_envelope", "s > p + 1"));
      r.checks.push_back(check_algebraic_envelope(r.trace, k.beta, gc, k.p, k.s));
    }
  } else {
    const std::string why = have_ref ? "norming constant unknown" : "no reference minimizer";
    r.checks.push_back(not_applicable("gap_sigma", why));
    r.checks.push_back(not_applicable("exponential_envelope", why));
    r.checks.push_back(not_applicable("algebraic_envelope", why));
  }

  // 6. rate
  if (have_ref) {
    std::vector<double> gaps;
    gaps.reserve(rows.size());
    for (const auto& row : rows) gaps.push_back(row.gap);
    r.rate = fit_rate(gaps, an.burn_in, an.floor * gap0);
  } else {
    r.rate.burn_in = an.burn_in;
  }
  judge_rate(r.rate, predicted_rate(k.p, k.s));

  r.pass = std::all_of(r.checks.begin(), r.checks.end(),
                       [](const CheckReport& c) { return !c.applicable || c.passed; }) &&
           (!r.rate.pass_defined || r.rate.pass);
  r.report = build_report(cfg, setup, r);
  return r;
}

// ------------------------------------------------------------------ commands

namespace {

struct Outcome {
  int code = 2;
  std::string name;
  std::string verdict = "error";
  std::string fitted_kind = "undetermined";
  double fitted_rate = kNaN;
  std::string predicted_kind;
  double predicted_rate = kNaN;
};

fs::path resolve(const fs::path& out_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || out_dir.empty() ? path : out_dir / path;
}

Outcome run_one(const fs::path& config_path, const fs::path& out_dir, std::ostream& out,
                std::ostream& err) {
  Outcome o;
  o.name = config_path.stem().string();
  ExperimentConfig cfg;
  std::optional<Setup> setup;
  try {
    cfg = load_config(config_path);
    o.name = cfg.name;
    setup.emplace(build_setup(cfg));
  } catch (const InconsistentAssumptions& e) {
    err << config_path.string() << ": inconsistent assumptions: " << e.what() << "\n";
    return o;
  } catch (const std::exception& e) {
    err << config_path.string() << ": " << e.what() << "\n";
    return o;
  }

  std::optional<RunResult> result;
  try {
    result.emplace(run_experiment(cfg, *setup));
  } catch (const std::exception& e) {
    err << cfg.name << ": run aborted: " << e.what() << "\n";
    Json report;
    report["config"] = cfg.raw;
    report["estimates"] = Json::object();
    report["norming"] = Json::object();
    report["checks"] = Json::object();
    report["rate"] = Json::object();
    report["verdict"] = "fail";
    report["error"] = e.what();
    try {
      write_text_file(resolve(out_dir, cfg.output.report_path), dump_json(report));
    } catch (const std::exception& io) {
      err << cfg.name << ": " << io.what() << "\n";
      return o;
    }
    o.code = 1;
    o.verdict = "fail";
    return o;
  }

  const RunResult& r = *result;
  try {
    write_text_file(resolve(out_dir, cfg.output.trace_path), trace_csv(r.trace));
    write_text_file(resolve(out_dir, cfg.output.report_path), dump_json(r.report));
    if (cfg.output.plot_path) {
      const PlotOutput plot = render_plot(r.trace.rows, cfg.analysis.burn_in);
      write_text_file(resolve(out_dir, *cfg.output.plot_path), plot.svg);
    }
  } catch (const std::exception& e) {
    err << cfg.name << ": " << e.what() << "\n";
    return o;
  }

  o.code = r.pass ? 0 : 1;
  o.verdict = r.pass ? "pass" : "fail";
  o.fitted_kind = to_string(r.rate.kind);
  if (r.rate.kind == RateKind::exponential) o.fitted_rate = r.rate.fitted_alpha;
  if (r.rate.kind == RateKind::algebraic) o.fitted_rate = r.rate.fitted_exponent;
  o.predicted_kind = to_string(r.rate.predicted.kind);
  o.predicted_rate = r.rate.predicted.kind == RateKind::algebraic ? r.rate.predicted.exponent
                                                                  : r.predicted_factor;

  out << cfg.name << ": " << o.verdict << " (" << r.trace.rows.size() - 1 << " steps, "
      << to_string(r.trace.reason) << ", rate " << o.fitted_kind << ")\n";
  if (!r.pass) {
    for (const auto& c : r.checks)
      if (c.applicable && !c.passed)
        err << cfg.name << ": check " << c.name << " failed: " << c.violations << " violation(s), worst "
            << format17(c.worst) << "\n";
    if (r.rate.pass_defined && !r.rate.pass)
      err << cfg.name << ": observed rate " << to_string(r.rate.kind) << " does not match predicted "
          << to_string(r.rate.predicted.kind) << "\n";
  }
  return o;
}

}  // namespace

int cmd_run(const fs::path& config_path, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return run_one(config_path, out_dir, out, err).code;
}

int cmd_sweep(const fs::path& dir, const fs::path& out_dir, int jobs, std::ostream& out,
              std::ostream& err) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    err << dir.string() << ": not a directory\n";
    return 2;
  }
  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") configs.push_back(entry.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    err << dir.string() << ": no *.json configs\n";
    return 2;
  }

  std::vector<Outcome> outcomes(configs.size());
  std::vector<std::string> logs(configs.size()), errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      std::ostringstream o, e;
      outcomes[i] = run_one(configs[i], out_dir, o, e);
      logs[i] = o.str();
      errors[i] = e.str();
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(configs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string csv = "name,verdict,fitted_kind,fitted_rate,predicted_kind,predicted_rate\n";
  bool all_ok = true;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    out << logs[i];
    err << errors[i];
    const auto& o = outcomes[i];
    all_ok = all_ok && o.code == 0;
    csv += o.name + "," + o.verdict + "," + o.fitted_kind + "," + format17(o.fitted_rate) + "," +
           o.predicted_kind + "," + format17(o.predicted_rate) + "\n";
  }
  try {
    write_text_file((out_dir.empty() ? fs::path(".") : out_dir) / "sweep_summary.csv", csv);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  out << configs.size() << " run(s), " << (all_ok ? "all passed" : "some failed") << "\n";
  return all_ok ? 0 : 1;
}

int cmd_plot(const fs::path& trace_path, const fs::path& out_path, std::ostream& out,
             std::ostream& err) {
  std::vector<IterationRecord> rows;
  try {
    rows = parse_trace_csv(read_text_file(trace_path));
  } catch (const std::exception& e) {
    err << trace_path.string() << ": " << e.what() << "\n";
    return 2;
  }
  const PlotOutput plot = render_plot(rows);
  for (const auto& w : plot.warnings) err << "warning: " << w << "\n";
  try {
    write_text_file(out_path, plot.svg);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  out << "wrote " << out_path.string() << "\n";
  return 0;
}

}  // namespace dictdescent
