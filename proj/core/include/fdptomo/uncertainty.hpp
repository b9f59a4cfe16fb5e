#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdptomo/fdp.hpp"
#include "fdptomo/fock.hpp"
#include "fdptomo/homodyne.hpp"
#include "fdptomo/ml.hpp"

namespace fdptomo {

struct McSpec {
  int n_trials = 200;
  /// Resample every histogram count as Poisson(N_n).
  bool bin_noise = true;
  /// Relative standard deviation of each probe amplitude.
  double alpha_rel_error = 0.027;
  std::uint64_t seed = 1;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
  friend bool operator==(const McSpec&, const McSpec&) = default;
};

/// Everything one trial needs to rebuild and refit.
struct McInputs {
  std::vector<DataPattern> probe_patterns;
  /// Amplitudes |alpha_xi| of the (effective) probe states.
  std::vector<double> probe_amplitudes;
  DataPattern target;
  int dim = kDefaultCutoff;
  SolverOptions solver;
  /// Fidelity of each trial's FDP state is reported against every reference.
  std::vector<std::pair<std::string, DensityMatrix>> references;
  /// When set, each trial also runs ML and reports F(rho_fdp, loss(rho_ml, ml_loss)).
  std::optional<BinnedPovm> ml_povm;
  MlOptions ml;
  double ml_loss = 1.0;
};

struct Interval {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  ///< sample standard deviation (n - 1)
  double lo = 0.0;  ///< mean - sd
  double hi = 0.0;  ///< mean + sd
};

struct IntervalReport {
  std::vector<Interval> coefficients;  ///< a[xi]
  std::vector<Interval> populations;   ///< P(n)
  std::vector<Interval> fidelities;    ///< F(<reference>) and F(ml)
  int n_trials = 0;
  int n_failed = 0;
  bool flagged = false;  ///< more than 5 % of trials failed
  std::vector<std::string> failures;

  const Interval* find(const std::string& name) const;
  /// Root mean square of the coefficient standard deviations.
  double coefficient_sd_rms() const;
};

Interval summarize(std::string name, const std::vector<double>& samples);

/// Monte Carlo propagation of bin-count noise and probe-amplitude errors.
/// Deterministic given spec.seed, whatever the thread count.
IntervalReport mc_propagate(const McInputs& inputs, const McSpec& spec);

}  // namespace fdptomo
