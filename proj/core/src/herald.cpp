#include "fdptomo/herald.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fdptomo/errors.hpp"

namespace fdptomo {

void TmsvSpec::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("TMSV gamma must lie in [0,1)");
  if (dim < 1) throw DomainError("TMSV cutoff must be positive");
}

SmdSpec SmdSpec::symmetric(int n_apds, double apd_efficiency, double dark_count_prob) {
  if (n_apds < 1) throw DomainError("SMD needs at least one APD");
  SmdSpec s;
  s.n_apds = n_apds;
  s.splitting.assign(static_cast<std::size_t>(n_apds), 1.0 / n_apds);
  s.apd_efficiency = apd_efficiency;
  s.dark_count_prob = dark_count_prob;
  return s;
}

void SmdSpec::validate() const {
  if (n_apds < 1 || n_apds > 20) throw DomainError("SMD APD count must lie in [1,20]");
  if (splitting.size() != static_cast<std::size_t>(n_apds)) {
    throw DimensionError("SMD splitting must list one probability per APD");
  }
  double sum = 0.0;
  for (double s : splitting) {
    if (!(s >= 0.0)) throw DomainError("SMD splitting entries must be >= 0");
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DomainError("SMD splitting must sum to 1");
  if (!(apd_efficiency >= 0.0 && apd_efficiency <= 1.0)) {
    throw DomainError("APD efficiency must lie in [0,1]");
  }
  if (!(dark_count_prob >= 0.0 && dark_count_prob < 1.0)) {
    throw DomainError("dark-count probability must lie in [0,1)");
  }
}

RealVector tmsv_photon_distribution(const TmsvSpec& tmsv) {
  tmsv.validate();
  const double g2 = tmsv.gamma * tmsv.gamma;
  const double tail = std::pow(g2, tmsv.dim);
  if (tail > kMaxTruncationLeakage) {
    const int need = static_cast<int>(std::ceil(std::log(kMaxTruncationLeakage) / std::log(g2)));
    std::ostringstream os;
    os << "TMSV gamma = " << tmsv.gamma << " leaks " << tail << " beyond cutoff " << tmsv.dim
       << "; need cutoff >= " << need;
    throw CutoffError(os.str(), need);
  }
  RealVector p(tmsv.dim);
  double w = 1.0 - g2;
  for (int n = 0; n < tmsv.dim; ++n) {
    p(n) = w;
    w *= g2;
  }
  return p;
}

double click_probability(int m_photons, int k_clicks, const SmdSpec& smd) {
  smd.validate();
  if (m_photons < 0) throw DomainError("photon number must be >= 0");
  if (k_clicks < 0 || k_clicks > smd.n_apds) {
    std::ostringstream os;
    os << "click count " << k_clicks << " outside [0, " << smd.n_apds << "]";
    throw DomainError(os.str());
  }
  const unsigned n = static_cast<unsigned>(smd.n_apds);
  const unsigned full = (1u << n) - 1u;

  // Probability that no APD in `mask` fires.
  auto silent = [&](unsigned mask) {
    double reach = 0.0;
    for (unsigned i = 0; i < n; ++i) {
      if (mask & (1u << i)) reach += smd.splitting[i];
    }
    const double photon_miss = std::max(0.0, 1.0 - smd.apd_efficiency * reach);
    const double photons = m_photons == 0 ? 1.0 : std::pow(photon_miss, m_photons);
    return photons * std::pow(1.0 - smd.dark_count_prob, std::popcount(mask));
  };

  double total = 0.0;
  for (unsigned clicked = 0; clicked <= full; ++clicked) {
    if (std::popcount(clicked) != k_clicks) continue;
    const unsigned quiet = full & ~clicked;
    // Inclusion-exclusion over the subsets T of the clicked set.
    double exact = 0.0;
    for (unsigned t = clicked;; t = (t - 1) & clicked) {
      const double sign = (std::popcount(t) % 2 == 0) ? 1.0 : -1.0;
      exact += sign * silent(quiet | t);
      if (t == 0) break;
    }
    total += exact;
  }
  return std::max(total, 0.0);
}

namespace {

RealVector joint_weights(const TmsvSpec& tmsv, const SmdSpec& smd, int k_clicks) {
  const RealVector prior = tmsv_photon_distribution(tmsv);
  RealVector w(prior.size());
  for (Eigen::Index n = 0; n < prior.size(); ++n) {
    w(n) = prior(n) * click_probability(static_cast<int>(n), k_clicks, smd);
  }
  return w;
}

}  // namespace

double herald_probability(const TmsvSpec& tmsv, const SmdSpec& smd, int k_clicks) {
  return joint_weights(tmsv, smd, k_clicks).sum();
}

DensityMatrix heralded_state(const TmsvSpec& tmsv, const SmdSpec& smd, int k_clicks) {
  RealVector w = joint_weights(tmsv, smd, k_clicks);
  const double norm = w.sum();
  if (!(norm > 0.0)) {
    std::ostringstream os;
    os << "heralding on " << k_clicks << " clicks has zero probability";
    throw DomainError(os.str());
  }
  return DensityMatrix::diagonal(w / norm);
}

}  // namespace fdptomo
