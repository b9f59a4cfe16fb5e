#pragma once

#include <vector>

#include "fdptomo/fock.hpp"

namespace fdptomo {

/// Two-mode squeezed vacuum sum_n sqrt(1-g^2) g^n |n,n>.
struct TmsvSpec {
  double gamma = 0.2;
  int dim = kDefaultCutoff;

  void validate() const;
  friend bool operator==(const TmsvSpec&, const TmsvSpec&) = default;
};

/// Spatially multiplexed trigger: a passive splitter feeding `n_apds`
/// binary click detectors.
struct SmdSpec {
  int n_apds = 3;
  std::vector<double> splitting{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double apd_efficiency = 1.0;
  double dark_count_prob = 0.0;

  static SmdSpec symmetric(int n_apds, double apd_efficiency = 1.0, double dark_count_prob = 0.0);
  void validate() const;
  friend bool operator==(const SmdSpec&, const SmdSpec&) = default;
};

/// P(n photons in each arm) = (1 - g^2) g^(2n) for n < dim. Throws
/// CutoffError when the omitted tail g^(2 dim) exceeds the leakage bound.
RealVector tmsv_photon_distribution(const TmsvSpec& tmsv);

/// Probability that m trigger photons produce exactly k clicks.
///
/// Photons route independently to branch i with probability s_i and are
/// registered there with the APD efficiency; every APD also fires on its own
/// with the dark-count probability. With Q(S) the probability that no APD in
/// subset S fires,
///   Q(S) = (1 - eta sum_{i in S} s_i)^m (1 - d)^|S|,
/// the probability that exactly the set C fires is
///   sum_{T subset C} (-1)^|T| Q(complement(C) + T),
/// summed over all C with |C| = k.
double click_probability(int m_photons, int k_clicks, const SmdSpec& smd);

/// Probability of k clicks for one TMSV pulse.
double herald_probability(const TmsvSpec& tmsv, const SmdSpec& smd, int k_clicks);

/// Signal-mode state conditioned on k clicks: diagonal with
/// P(n | k) proportional to P_tmsv(n) click_probability(n, k).
DensityMatrix heralded_state(const TmsvSpec& tmsv, const SmdSpec& smd, int k_clicks);

}  // namespace fdptomo
