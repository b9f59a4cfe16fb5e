#include "fdptomo/probe.hpp"

#include <cmath>
#include <sstream>

#include "fdptomo/errors.hpp"

namespace fdptomo {

namespace {

double poisson_log_pmf(double mean, int n) {
  if (mean == 0.0) return n == 0 ? 0.0 : -INFINITY;
  return -mean + n * std::log(mean) - std::lgamma(n + 1.0);
}

}  // namespace

void CalibrationInputs::validate() const {
  auto fail = [](const char* what, double v) {
    std::ostringstream os;
    os << "calibration input " << what << " out of range: " << v;
    throw DomainError(os.str());
  };
  if (!(power_w > 0.0)) fail("power_w", power_w);
  if (!(rep_rate_hz > 0.0)) fail("rep_rate_hz", rep_rate_hz);
  if (!(wavelength_m > 0.0)) fail("wavelength_m", wavelength_m);
  if (!(t_over_r > 0.0)) fail("t_over_r", t_over_r);
  if (!(od1 >= 0.0)) fail("od1", od1);
  if (!(od2 >= 0.0)) fail("od2", od2);
  if (!(visibility > 0.0 && visibility <= 1.0)) fail("visibility", visibility);
  if (!(planck > 0.0)) fail("planck", planck);
  if (!(light_speed > 0.0)) fail("light_speed", light_speed);
}

double calibrate_alpha(const CalibrationInputs& in) {
  in.validate();
  // photons per pulse = P lambda / (h c nu)
  const double radicand = in.power_w * in.t_over_r * std::pow(10.0, -in.od1 - in.od2) *
                          in.visibility * in.visibility * in.wavelength_m /
                          (in.planck * in.light_speed * in.rep_rate_hz);
  return std::sqrt(radicand);
}

double poisson_tail(double mean, int dim) {
  if (dim <= 0) return 1.0;
  if (mean == 0.0) return 0.0;
  // Sum the tail directly; past the mode the terms decay geometrically.
  double tail = 0.0;
  for (int n = dim;; ++n) {
    const double term = std::exp(poisson_log_pmf(mean, n));
    tail += term;
    if (n > mean && term < 1e-18 * std::max(tail, 1e-300)) break;
    if (n > dim + 10000) break;
  }
  return tail;
}

int required_cutoff(double alpha_abs, double leakage) {
  const double mean = alpha_abs * alpha_abs;
  int dim = 1;
  while (poisson_tail(mean, dim) > leakage) ++dim;
  return dim;
}

DensityMatrix phav_density(double alpha_abs, int dim, double max_leakage) {
  if (!(alpha_abs >= 0.0)) throw DomainError("phav_density: |alpha| must be >= 0");
  if (dim < 1) throw DomainError("phav_density: cutoff must be positive");
  const double mean = alpha_abs * alpha_abs;
  const double tail = poisson_tail(mean, dim);
  if (tail > max_leakage) {
    const int need = required_cutoff(alpha_abs, max_leakage);
    std::ostringstream os;
    os << "|alpha| = " << alpha_abs << " leaks " << tail << " beyond cutoff " << dim
       << "; need cutoff >= " << need;
    throw CutoffError(os.str(), need);
  }
  RealVector p(dim);
  for (int n = 0; n < dim; ++n) p(n) = std::exp(poisson_log_pmf(mean, n));
  p /= p.sum();
  return DensityMatrix::diagonal(p);
}

ProbeLadder build_probe_ladder(double alpha_min, double alpha_max, int count, int dim,
                               const ProbeLadderOptions& options) {
  if (!(alpha_min < alpha_max)) {
    std::ostringstream os;
    os << "probe ladder needs alpha_min < alpha_max, got [" << alpha_min << ", " << alpha_max
       << "]";
    throw DomainError(os.str());
  }
  if (alpha_min < 0.0) throw DomainError("probe ladder amplitudes must be >= 0");
  if (count < 2) throw DomainError("probe ladder needs at least two probes");
  if (options.include_vacuum && alpha_min == 0.0) {
    throw DomainError("vacuum probe requested but alpha_min is already 0");
  }

  ProbeLadder ladder;
  ladder.dim = dim;
  if (options.include_vacuum) ladder.amplitudes.push_back(0.0);
  for (double a : linspace(alpha_min, alpha_max, count)) ladder.amplitudes.push_back(a);
  ladder.states.reserve(ladder.amplitudes.size());
  for (double a : ladder.amplitudes) ladder.states.push_back(phav_density(a, dim));
  return ladder;
}

}  // namespace fdptomo
