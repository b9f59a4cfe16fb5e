#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "fdptomo/fock.hpp"

namespace fdptomo::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitSolver = 2,
  kExitAcceptance = 3,
};

/// vacuum | herald:k | fock:n | phav:alpha | file:path
struct StateSelector {
  std::string text;
  std::string kind;
  int index = 0;
  double amplitude = 0.0;
  std::string path;

  /// File-name-safe form used for stage outputs, e.g. herald_1.
  std::string stem() const;
};

/// Throws ConfigError for an unknown or malformed selector.
StateSelector parse_selector(const std::string& text);

/// The state the selector names, before detector loss.
DensityMatrix selector_state(const StateSelector& selector, const ExperimentConfig& config);

/// Stage commands. Each reads and writes files under `out` only.
void cmd_calibrate(const ExperimentConfig& config, const fs::path& out);
void cmd_acquire(const ExperimentConfig& config, const fs::path& out,
                 const std::vector<std::string>& selectors);
/// Inputs are acquired state files (state_*.json) or bare pattern CSVs;
/// empty means every configured state.
void cmd_fit(const ExperimentConfig& config, const fs::path& out,
             const std::vector<std::string>& inputs);
void cmd_mc(const ExperimentConfig& config, const fs::path& out,
            const std::vector<std::string>& inputs);
/// Returns kExitOk or kExitAcceptance.
int cmd_report(const ExperimentConfig& config, const fs::path& out);

/// Files every stage writes into the output directory except timing data.
std::vector<fs::path> numeric_outputs(const fs::path& out);

}  // namespace fdptomo::cli
