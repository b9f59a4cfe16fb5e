#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "fdptomo/fdp.hpp"
#include "fdptomo/herald.hpp"
#include "fdptomo/probe.hpp"

namespace testing_support {

struct Instance {
  fdptomo::FdpProblem problem;
  std::string label;
};

// A measured FDP problem with a random ladder, detector efficiency, pulse
// count and unknown state, drawn the way the pipeline would produce it.
inline Instance random_instance(std::uint64_t seed, std::int64_t max_pulses = 100000) {
  using namespace fdptomo;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lo(0.1, 0.4), hi(1.4, 2.3), eta(0.6, 1.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(6, 48), kind(0, 3);
  DetectorModel d;
  d.eta_bhd = eta(rng);
  d.static_blocked_samples = 100000;
  const std::int64_t pulses = (rng() % 2 == 0 || max_pulses <= 10000) ? 10000 : max_pulses;
  const auto ladder = build_probe_ladder(lo(rng), hi(rng), count(rng), kDefaultCutoff);
  const auto set = calibrate_probes(ladder, d, pulses, BinningSpec{}, rng());

  DensityMatrix truth = fock_state(0, kDefaultCutoff);
  std::string label;
  switch (kind(rng)) {
    case 0: {
      const int k = 1 + static_cast<int>(rng() % 3);
      truth = heralded_state(TmsvSpec{}, SmdSpec{}, k);
      label = "herald:" + std::to_string(k);
      break;
    }
    case 1: {
      const int n = static_cast<int>(rng() % 4);
      truth = fock_state(n, kDefaultCutoff);
      label = "fock:" + std::to_string(n);
      break;
    }
    case 2: {
      const double a = 0.3 + 1.5 * unit(rng);
      truth = phav_density(a, kDefaultCutoff);
      label = "phav:" + std::to_string(a);
      break;
    }
    default: {
      RealVector pops = RealVector::Zero(kDefaultCutoff);
      pops(1) = pops(3) = 0.5;
      truth = DensityMatrix::diagonal(pops);
      label = "mix13";
    }
  }
  const auto target = acquire_pattern(truth, d, pulses, BinningSpec{}, rng());
  Instance out{FdpProblem::from_patterns(set.patterns(), target, set.states()), label};
  out.label += " M=" + std::to_string(out.problem.probe_count()) + " K=" + std::to_string(pulses);
  return out;
}

}  // namespace testing_support
