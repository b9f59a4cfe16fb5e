#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fdptomo/errors.hpp"
#include "fdptomo/fdp.hpp"
#include "fdptomo/herald.hpp"
#include "fdptomo/homodyne.hpp"
#include "fdptomo/ml.hpp"
#include "fdptomo/uncertainty.hpp"

namespace fdptomo::cli {

/// Raised for invalid configuration; the message carries line:column.
class ConfigError : public Error {
public:
  using Error::Error;
};

struct LadderConfig {
  double alpha_min = 0.17;
  double alpha_max = 2.24;
  int count = 48;
  bool include_vacuum = false;
  std::int64_t pulses = 1000000;

  friend bool operator==(const LadderConfig&, const LadderConfig&) = default;
};

struct SourceConfig {
  TmsvSpec tmsv;
  SmdSpec smd = SmdSpec::symmetric(3);
  std::int64_t pulses = 1000000;
  /// Selectors acquired and fitted when none are named on the command line.
  std::vector<std::string> states{"herald:1", "herald:2", "herald:3"};

  friend bool operator==(const SourceConfig&, const SourceConfig&) = default;
};

struct MlConfig {
  bool enabled = true;
  MlOptions options;

  friend bool operator==(const MlConfig&, const MlConfig&) = default;
};

struct McConfig {
  McSpec spec;
  bool run_ml = false;

  friend bool operator==(const McConfig&, const McConfig&) = default;
};

struct WignerConfig {
  double lo = -4.0;
  double hi = 4.0;
  int points = 81;

  friend bool operator==(const WignerConfig&, const WignerConfig&) = default;
};

/// Thresholds checked by `report`; a state missing from a map is unchecked.
struct ThresholdConfig {
  std::map<std::string, double> min_fidelity_truth{
      {"herald:1", 0.98}, {"herald:2", 0.96}, {"herald:3", 0.93}};
  double min_fidelity_ml = 0.92;
  /// Fraction of bins whose residual lies inside 3 sqrt(N_n) / K.
  double min_envelope_fraction = 0.99;

  friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 20240611;
  std::string output_dir = "fdptomo-run";
  int dim = kDefaultCutoff;
  LadderConfig probes;
  BinningSpec binning;
  DetectorModel detector;
  SourceConfig source;
  SolverOptions solver;
  MlConfig ml;
  McConfig mc;
  WignerConfig wigner;
  ThresholdConfig thresholds;

  /// Cross-section checks (the per-type validators run during parsing).
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Detector defaults: eta 0.85 and electronic noise at 14.5 dB clearance.
ExperimentConfig default_config();

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full YAML dump with every field; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

}  // namespace fdptomo::cli
