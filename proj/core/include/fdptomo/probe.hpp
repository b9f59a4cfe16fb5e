#pragma once

#include <vector>

#include "fdptomo/fock.hpp"

namespace fdptomo {

/// Inputs of the power-meter amplitude calibration. SI units throughout.
struct CalibrationInputs {
  double power_w = 0.0;            ///< average power on the calibrated meter
  double t_over_r = 1.0;           ///< pick-off beamsplitter T/R
  double od1 = 0.0;                ///< optical density, filter 1
  double od2 = 0.0;                ///< optical density, filter 2
  double visibility = 1.0;         ///< probe/LO interference visibility, (0,1]
  double wavelength_m = 827.6e-9;  ///< probe central wavelength
  double rep_rate_hz = 3.997e6;    ///< pulse repetition rate after the picker
  double planck = 6.62607015e-34;  ///< CODATA 2018, exact
  double light_speed = 299792458.0;

  /// Throws DomainError on non-positive power/frequency/wavelength, negative
  /// optical density or visibility outside (0,1].
  void validate() const;
};

/// Effective coherent amplitude |alpha| seen by the detector:
/// sqrt(P T/R 10^(-OD1-OD2) V^2 lambda / (h c nu)).
double calibrate_alpha(const CalibrationInputs& inputs);

/// Poisson mass with mean `mean` at photon numbers >= dim.
double poisson_tail(double mean, int dim);

/// Smallest cutoff whose Poisson tail for |alpha|^2 is at most `leakage`.
int required_cutoff(double alpha_abs, double leakage = kMaxTruncationLeakage);

/// Phase-averaged coherent state: diagonal, Poisson with mean |alpha|^2,
/// renormalised over the retained basis. Throws CutoffError when the
/// discarded tail exceeds `max_leakage`.
DensityMatrix phav_density(double alpha_abs, int dim,
                           double max_leakage = kMaxTruncationLeakage);

struct ProbeLadderOptions {
  bool include_vacuum = false;  ///< prepend an |alpha| = 0 probe
};

/// Ordered probe amplitudes with their density matrices.
struct ProbeLadder {
  std::vector<double> amplitudes;
  int dim = kDefaultCutoff;
  std::vector<DensityMatrix> states;

  std::size_t size() const { return amplitudes.size(); }
};

/// `count` evenly spaced amplitudes from alpha_min to alpha_max inclusive.
ProbeLadder build_probe_ladder(double alpha_min, double alpha_max, int count, int dim,
                               const ProbeLadderOptions& options = {});

}  // namespace fdptomo
