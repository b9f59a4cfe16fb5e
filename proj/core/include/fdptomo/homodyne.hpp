#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdptomo/fock.hpp"
#include "fdptomo/probe.hpp"

namespace fdptomo {

/// Uniform discretisation of the rescaled-voltage axis into detector outcomes.
/// Bins are half-open [edge_i, edge_{i+1}); samples outside [lo, hi) are
/// clamped into the first or last bin.
struct BinningSpec {
  int n_bins = 151;
  double lo = -6.0;
  double hi = 6.0;

  void validate() const;
  double width() const { return (hi - lo) / n_bins; }
  double edge(int i) const;
  double center(int i) const { return lo + (i + 0.5) * width(); }
  /// Clamped bin index of a sample.
  int index_of(double x) const;

  friend bool operator==(const BinningSpec&, const BinningSpec&) = default;
};

/// Outcome histogram N_n of K pulses and its frequencies f_n = N_n / K.
struct DataPattern {
  BinningSpec binning;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;

  /// Validates sizes and non-negativity; total is the sum of the counts.
  static DataPattern from_counts(const BinningSpec& binning, std::vector<std::int64_t> counts);

  RealVector frequencies() const;
  /// Sample mean and variance of the bin centres weighted by counts.
  double mean() const;
  double variance() const;

  friend bool operator==(const DataPattern&, const DataPattern&) = default;
};

/// Slow sinusoidal drift of gain (relative) and offset (volts) with pulse index.
struct DriftModel {
  double gain_amplitude = 0.0;
  double offset_amplitude = 0.0;
  double period_pulses = 2.0e5;

  bool enabled() const { return gain_amplitude != 0.0 || offset_amplitude != 0.0; }
  friend bool operator==(const DriftModel&, const DriftModel&) = default;
};

/// Raw-voltage response of the balanced detector.
struct DetectorModel {
  double eta_bhd = 1.0;              ///< overall detection efficiency
  double gain = 1.0;                 ///< volts per quadrature unit
  double offset = 0.0;               ///< volts
  double electronic_noise_sd = 0.0;  ///< volts, additive Gaussian
  DriftModel drift;
  /// With drift on, a blocked-input calibration frame is taken for every
  /// `frame_pulses` signal pulses and used to rescale only those pulses.
  std::int64_t frame_pulses = 10000;
  std::int64_t blocked_per_frame = 10000;
  /// Blocked-input samples used for the single calibration without drift.
  std::int64_t static_blocked_samples = 1000000;

  void validate() const;

  double gain_at(double pulse) const;
  double offset_at(double pulse) const;

  /// Transmission of the equivalent pure-loss channel after rescaling:
  /// electronic noise of variance s^2 on a shot-noise variance g^2/2 is
  /// indistinguishable from extra loss 1/(1 + 2 s^2 / g^2).
  double effective_efficiency() const;

  /// Noise standard deviation giving the stated shot-to-electronic noise
  /// clearance (dB) at this gain.
  static double noise_sd_for_clearance(double clearance_db, double gain);

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

/// psi_0(x) .. psi_{dim-1}(x): normalised Hermite functions with
/// |psi_0|^2 = exp(-x^2) / sqrt(pi).
void hermite_functions(double x, std::span<double> out);

/// Born-rule quadrature density <x|rho|x> at phase 0.
double quadrature_pdf(const DensityMatrix& rho, double x);

/// Inverse-CDF sampler over a dense tabulation of quadrature_pdf.
class QuadratureSampler {
public:
  static constexpr double kDefaultStep = 1e-3;
  static constexpr double kDefaultHalfRange = 8.0;

  explicit QuadratureSampler(const DensityMatrix& rho, double step = kDefaultStep,
                             double half_range = kDefaultHalfRange);

  /// Quadrature value at cumulative probability u in (0,1).
  double quantile(double u) const;
  /// Probability mass the tabulation covers before normalisation.
  double covered_mass() const { return covered_mass_; }

private:
  double lo_;
  double step_;
  std::vector<double> cdf_;
  double covered_mass_ = 0.0;
};

/// Raw voltages of K pulses: loss eta_bhd, quadrature sampling, gain/offset
/// (with drift) and electronic noise. Bitwise deterministic given the seed,
/// independent of thread count.
std::vector<double> simulate_pulses(const DensityMatrix& rho, const DetectorModel& detector,
                                    std::int64_t pulses, std::uint64_t seed);

/// Raw voltages with the signal input blocked (vacuum) for `count` pulses
/// interleaved over the window [first_pulse, first_pulse + span).
std::vector<double> simulate_blocked(const DetectorModel& detector, std::int64_t count,
                                     std::uint64_t seed, double first_pulse = 0.0,
                                     double span = 0.0);

/// Affine map V' = A V - B.
struct Rescaling {
  double scale = 1.0;   ///< A
  double shift = 0.0;   ///< B
  double apply(double v) const { return scale * v - shift; }
};

/// A = sqrt(C2 / var(V_blocked)), B = A <V_blocked> - C1.
Rescaling fit_rescaling(std::span<const double> blocked, double c1, double c2);
std::vector<double> rescale_voltages(std::span<const double> signal,
                                     std::span<const double> blocked, double c1, double c2);

DataPattern bin_samples(std::span<const double> samples, const BinningSpec& binning);

/// Rescaling constants that make V' a quadrature with vacuum variance 1/2.
inline constexpr double kRescaleMean = 0.0;
inline constexpr double kRescaleVariance = 0.5;

/// Full acquisition: simulate, rescale against blocked frames, bin.
DataPattern acquire_pattern(const DensityMatrix& rho, const DetectorModel& detector,
                            std::int64_t pulses, const BinningSpec& binning, std::uint64_t seed);

/// B_j(m,n) = integral over bin j of psi_m psi_n, edge bins extended to
/// +-infinity to match clamping. Adaptive Gauss-Legendre quadrature.
std::vector<RealMatrix> binned_quadrature_projectors(const BinningSpec& binning, int dim);

/// Exact bin probabilities Tr(B_j rho) for a state at the detector.
RealVector bin_probabilities(const DensityMatrix& rho, const BinningSpec& binning);
RealVector bin_probabilities(const DensityMatrix& rho,
                             const std::vector<RealMatrix>& projectors);

/// A calibrated probe: physical amplitude sent in, effective amplitude and
/// state registered by the detector, and the measured data pattern.
struct Probe {
  double amplitude = 0.0;
  double effective_amplitude = 0.0;
  DensityMatrix state = fock_state(0, 1);
  DataPattern pattern;
};

/// The calibration field of view.
struct ProbeSet {
  int dim = kDefaultCutoff;
  double efficiency = 1.0;  ///< detector transmission folded into the probe states
  BinningSpec binning;
  std::vector<Probe> probes;

  std::vector<DensityMatrix> states() const;
  std::vector<DataPattern> patterns() const;
  std::vector<double> effective_amplitudes() const;
};

/// Measures every ladder probe with the detector. Phase-averaged coherent
/// states stay phase-averaged coherent under loss, so each probe is recorded
/// with its effective amplitude sqrt(eta_eff) |alpha|.
ProbeSet calibrate_probes(const ProbeLadder& ladder, const DetectorModel& detector,
                          std::int64_t pulses, const BinningSpec& binning, std::uint64_t seed);

}  // namespace fdptomo
