#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dictdescent/dictionary.hpp"
#include "dictdescent/energy.hpp"
#include "dictdescent/greedy.hpp"
#include "dictdescent/io.hpp"

namespace dictdescent {

inline constexpr int kConfigVersion = 1;

struct SpaceSpec {
  std::size_t n = 0;
  double q = 2.0;
  std::string weights = "unit";   // unit | uniform | grid | explicit
  std::vector<double> explicit_weights;
};

struct EnergySpec {
  std::string kind;               // power | quadratic | plaplacian
  double p = 1.0;                 // power
  double q_exp = 2.0;             // plaplacian
  Json target;                    // power
  Json source;                    // quadratic, plaplacian
  Json matrix;                    // quadratic
  std::uint64_t seed = 0;
  std::optional<SmoothnessParams> declared;
};

struct DictionarySpec {
  std::string kind;               // finite-atoms | coordinate-cone | subspace-union | full-space
  Json params;                    // the dictionary object minus "kind"
};

struct AnalysisSpec {
  int burn_in = 5;
  double floor = 1e-13;           // relative to gap_0
  int trials = 10000;
  std::uint64_t seed = 0;
  int samples = 500;
  double region_radius = 0.0;     // <= 0: 2 |u*| + 1
};

struct OutputSpec {
  std::string trace_path;
  std::string report_path;
  std::optional<std::string> plot_path;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string name;
  SpaceSpec space;
  EnergySpec energy;
  DictionarySpec dictionary;
  GreedyConfig greedy;
  AnalysisSpec analysis;
  OutputSpec output;
  Json raw;                       // the document as read
};

// Strict schema check: unknown keys, wrong types and inconsistent settings
// throw ConfigError (InconsistentAssumptions for a declared (p, s) pair that
// breaks the exponent relation).
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

SpacePtr build_space(const ExperimentConfig& cfg);
EnergyPtr build_energy(const ExperimentConfig& cfg, const SpacePtr& space);
Dictionary build_dictionary(const ExperimentConfig& cfg, const SpacePtr& space);

}  // namespace dictdescent
