#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dictdescent/analysis.hpp"
#include "dictdescent/config.hpp"

namespace dictdescent {

// Constants actually fed into the checks, with where each one came from.
struct EffectiveConstants {
  double p = 1.0;
  double s = 2.0;
  SmoothnessMode mode = SmoothnessMode::global;
  double lip = 0.0;
  std::string lip_source;
  double alpha = 0.0;
  std::string alpha_source;
  double ball_radius = 0.0;
  double beta = 0.0;
  double lip_r = 0.0;   // bounded mode only
  double lip_2r = 0.0;  // bounded mode only
  double m_r = 0.0;     // bounded mode only
};

struct RunResult {
  explicit RunResult(GreedyTrace t) : trace(std::move(t)) {}

  std::string name;
  EstimateResult smoothness;
  EstimateResult ellipticity;
  double region_radius = 0.0;
  NormingConstant norming_constant;
  NormingReport norming;
  bool norming_checked = false;
  GreedyTrace trace;
  EffectiveConstants constants;
  std::vector<CheckReport> checks;  // each name once
  RateReport rate;
  double predicted_factor = 0.0;    // 1 - mu in the critical case, NaN otherwise
  bool pass = false;
  Json report;
};

struct Setup {
  SpacePtr space;
  EnergyPtr energy;
  Dictionary dictionary;
};

// everything that can fail on bad input happens here
Setup build_setup(const ExperimentConfig& cfg);

// estimate -> verify_norming -> run_greedy -> checks -> fit_rate
RunResult run_experiment(const ExperimentConfig& cfg, const Setup& setup);
RunResult run_experiment(const ExperimentConfig& cfg);

// Exit codes: 0 pass, 1 some check failed, 2 usage or validation error.
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            std::ostream& out, std::ostream& err);
int cmd_sweep(const std::filesystem::path& dir, const std::filesystem::path& out_dir, int jobs,
              std::ostream& out, std::ostream& err);
int cmd_plot(const std::filesystem::path& trace_path, const std::filesystem::path& out_path,
             std::ostream& out, std::ostream& err);

}  // namespace dictdescent
