#include "fdptomo/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fdptomo/errors.hpp"
#include "fdptomo/probe.hpp"
#include "fdptomo/rng.hpp"
#include "parallel.hpp"

namespace fdptomo {

void McSpec::validate() const {
  if (n_trials < 2) throw DomainError("Monte Carlo needs at least 2 trials");
  if (!(alpha_rel_error >= 0.0)) throw DomainError("alpha_rel_error must be >= 0");
}

const Interval* IntervalReport::find(const std::string& name) const {
  for (const auto* group : {&coefficients, &populations, &fidelities}) {
    for (const auto& i : *group) {
      if (i.name == name) return &i;
    }
  }
  return nullptr;
}

double IntervalReport::coefficient_sd_rms() const {
  if (coefficients.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : coefficients) s += c.sd * c.sd;
  return std::sqrt(s / static_cast<double>(coefficients.size()));
}

Interval summarize(std::string name, const std::vector<double>& samples) {
  Interval out;
  out.name = std::move(name);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (samples.empty()) {
    out.mean = out.sd = out.lo = out.hi = nan;
    return out;
  }
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  out.mean = mean;
  out.sd = samples.size() > 1 ? std::sqrt(ss / static_cast<double>(samples.size() - 1)) : nan;
  out.lo = mean - out.sd;
  out.hi = mean + out.sd;
  return out;
}

namespace {

struct Trial {
  bool ok = false;
  std::string error;
  std::vector<double> coefficients;
  std::vector<double> populations;
  std::vector<double> fidelities;
};

DataPattern resample(const DataPattern& p, Engine& engine) {
  std::vector<std::int64_t> counts(p.counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (p.counts[i] > 0) {
      std::poisson_distribution<std::int64_t> dist(static_cast<double>(p.counts[i]));
      counts[i] = dist(engine);
    }
  }
  return DataPattern::from_counts(p.binning, std::move(counts));
}

Trial run_trial(const McInputs& in, const McSpec& spec, std::size_t index) {
  Trial t;
  Engine engine(derive_seed(spec.seed, Stream::monte_carlo, index));
  std::vector<DataPattern> patterns = in.probe_patterns;
  DataPattern target = in.target;
  if (spec.bin_noise) {
    for (auto& p : patterns) p = resample(p, engine);
    target = resample(target, engine);
  }
  std::vector<DensityMatrix> states;
  states.reserve(in.probe_amplitudes.size());
  for (double a : in.probe_amplitudes) {
    double factor = 1.0;
    if (spec.alpha_rel_error > 0.0) {
      factor = std::normal_distribution<double>(1.0, spec.alpha_rel_error)(engine);
    }
    states.push_back(phav_density(std::abs(a * factor), in.dim));
  }
  for (const auto& p : patterns) {
    if (p.total <= 0) throw SolverError("resampled probe pattern is empty");
  }
  if (target.total <= 0) throw SolverError("resampled target pattern is empty");

  const FdpProblem problem = FdpProblem::from_patterns(patterns, target, std::move(states));
  const FdpSolution sol = fdp_fit(problem, in.solver);
  t.coefficients.assign(sol.coefficients.data(), sol.coefficients.data() + sol.coefficients.size());
  const RealVector pn = sol.state.matrix().diagonal().real();
  t.populations.assign(pn.data(), pn.data() + pn.size());
  const DensityMatrix& state = sol.state;
  for (const auto& ref : in.references) t.fidelities.push_back(fidelity(state, ref.second));
  if (in.ml_povm) {
    const MlResult ml = ml_reconstruct(target, *in.ml_povm, in.ml);
    t.fidelities.push_back(fidelity(state, loss_channel(ml.state, in.ml_loss)));
  }
  t.ok = true;
  return t;
}

}  // namespace

IntervalReport mc_propagate(const McInputs& inputs, const McSpec& spec) {
  spec.validate();
  if (inputs.probe_patterns.size() != inputs.probe_amplitudes.size()) {
    throw DimensionError("one amplitude per probe pattern required");
  }
  const auto n = static_cast<std::size_t>(spec.n_trials);
  std::vector<Trial> trials(n);
  detail::parallel_for(
      n,
      [&](std::size_t i) {
        try {
          trials[i] = run_trial(inputs, spec, i);
        } catch (const Error& e) {
          trials[i].ok = false;
          trials[i].error = e.what();
        }
      },
      spec.threads);

  IntervalReport report;
  report.n_trials = spec.n_trials;
  const auto m = inputs.probe_patterns.size();
  std::vector<std::vector<double>> coef(m), pops(static_cast<std::size_t>(inputs.dim));
  std::vector<std::string> fid_names;
  for (const auto& r : inputs.references) fid_names.push_back("F(" + r.first + ")");
  if (inputs.ml_povm) fid_names.push_back("F(ml)");
  std::vector<std::vector<double>> fids(fid_names.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Trial& t = trials[i];
    if (!t.ok) {
      ++report.n_failed;
      std::ostringstream os;
      os << "trial " << i << ": " << t.error;
      report.failures.push_back(os.str());
      continue;
    }
    for (std::size_t k = 0; k < m; ++k) coef[k].push_back(t.coefficients[k]);
    for (std::size_t k = 0; k < pops.size(); ++k) pops[k].push_back(t.populations[k]);
    for (std::size_t k = 0; k < fids.size(); ++k) fids[k].push_back(t.fidelities[k]);
  }
  for (std::size_t k = 0; k < m; ++k) {
    report.coefficients.push_back(summarize("a[" + std::to_string(k) + "]", coef[k]));
  }
  for (std::size_t k = 0; k < pops.size(); ++k) {
    report.populations.push_back(summarize("P(" + std::to_string(k) + ")", pops[k]));
  }
  for (std::size_t k = 0; k < fids.size(); ++k) {
    report.fidelities.push_back(summarize(fid_names[k], fids[k]));
  }
  report.flagged = report.n_failed > 0.05 * spec.n_trials;
  return report;
}

}  // namespace fdptomo
