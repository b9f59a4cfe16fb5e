#include "fdptomo/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "fdptomo/errors.hpp"
#include "fdptomo/rng.hpp"
#include "parallel.hpp"

namespace fdptomo {

namespace {

constexpr std::int64_t kChunk = 1 << 16;

std::int64_t chunk_count(std::int64_t n) { return (n + kChunk - 1) / kChunk; }

// Quadrature density evaluator with a diagonal fast path.
class PdfEvaluator {
public:
  explicit PdfEvaluator(const DensityMatrix& rho)
      : diagonal_(rho.is_diagonal()),
        re_(rho.matrix().real()),
        pop_(rho.matrix().diagonal().real()),
        psi_(static_cast<std::size_t>(rho.dim())) {}

  double operator()(double x) {
    hermite_functions(x, psi_);
    const auto d = static_cast<Eigen::Index>(psi_.size());
    Eigen::Map<const RealVector> psi(psi_.data(), d);
    double p = 0.0;
    if (diagonal_) {
      p = pop_.dot(psi.cwiseAbs2());
    } else {
      p = psi.dot(re_ * psi);
    }
    return std::max(p, 0.0);
  }

private:
  bool diagonal_;
  RealMatrix re_;
  RealVector pop_;
  std::vector<double> psi_;
};

using Gauss20 = boost::math::quadrature::gauss<double, 20>;

// Integral over [a, b] of psi psi^T by 20-point Gauss-Legendre.
RealMatrix gauss_block(double a, double b, int dim, std::vector<double>& psi) {
  RealMatrix acc = RealMatrix::Zero(dim, dim);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& nodes = Gauss20::abscissa();
  const auto& weights = Gauss20::weights();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (double sign : {-1.0, 1.0}) {
      hermite_functions(mid + sign * half * nodes[i], psi);
      Eigen::Map<const RealVector> v(psi.data(), dim);
      acc.selfadjointView<Eigen::Lower>().rankUpdate(v, weights[i] * half);
    }
  }
  return acc.selfadjointView<Eigen::Lower>();
}

RealMatrix adaptive_block(double a, double b, int dim, std::vector<double>& psi,
                          const RealMatrix& whole, int depth) {
  const double mid = 0.5 * (a + b);
  RealMatrix left = gauss_block(a, mid, dim, psi);
  RealMatrix right = gauss_block(mid, b, dim, psi);
  RealMatrix refined = left + right;
  if (depth >= 16 || (refined - whole).cwiseAbs().maxCoeff() <= 1e-15) return refined;
  return adaptive_block(a, mid, dim, psi, left, depth + 1) +
         adaptive_block(mid, b, dim, psi, right, depth + 1);
}

RealMatrix integrate_projector(double a, double b, int dim, std::vector<double>& psi) {
  return adaptive_block(a, b, dim, psi, gauss_block(a, b, dim, psi), 0);
}

}  // namespace

void BinningSpec::validate() const {
  if (n_bins < 2) throw DomainError("binning needs at least two bins");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError("binning range must satisfy lo < hi");
  }
}

double BinningSpec::edge(int i) const {
  if (i == n_bins) return hi;
  return lo + i * width();
}

int BinningSpec::index_of(double x) const {
  if (!(x >= lo)) return 0;  // also catches NaN
  if (x >= hi) return n_bins - 1;
  const int i = static_cast<int>(std::floor((x - lo) / width()));
  // Guard against rounding at an interior edge.
  if (i >= n_bins) return n_bins - 1;
  if (i > 0 && x < edge(i)) return i - 1;
  if (i + 1 < n_bins && x >= edge(i + 1)) return i + 1;
  return i;
}

DataPattern DataPattern::from_counts(const BinningSpec& binning,
                                     std::vector<std::int64_t> counts) {
  binning.validate();
  if (counts.size() != static_cast<std::size_t>(binning.n_bins)) {
    std::ostringstream os;
    os << "pattern has " << counts.size() << " bins, binning expects " << binning.n_bins;
    throw DimensionError(os.str());
  }
  DataPattern p;
  p.binning = binning;
  for (auto c : counts) {
    if (c < 0) throw DomainError("negative bin count");
    p.total += c;
  }
  if (p.total <= 0) throw DomainError("pattern holds no events");
  p.counts = std::move(counts);
  return p;
}

RealVector DataPattern::frequencies() const {
  RealVector f(static_cast<Eigen::Index>(counts.size()));
  const double k = static_cast<double>(total);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    f(static_cast<Eigen::Index>(i)) = static_cast<double>(counts[i]) / k;
  }
  return f;
}

double DataPattern::mean() const {
  double m = 0.0;
  for (int i = 0; i < binning.n_bins; ++i) m += binning.center(i) * static_cast<double>(counts[i]);
  return m / static_cast<double>(total);
}

double DataPattern::variance() const {
  const double m = mean();
  double v = 0.0;
  for (int i = 0; i < binning.n_bins; ++i) {
    const double d = binning.center(i) - m;
    v += d * d * static_cast<double>(counts[i]);
  }
  return v / static_cast<double>(total);
}

void DetectorModel::validate() const {
  auto fail = [](const std::string& what) { throw DomainError("detector: " + what); };
  if (!(eta_bhd >= 0.0 && eta_bhd <= 1.0)) fail("eta_bhd must lie in [0,1]");
  if (!(gain > 0.0)) fail("gain must be positive");
  if (!(electronic_noise_sd >= 0.0)) fail("electronic_noise_sd must be >= 0");
  if (!std::isfinite(offset)) fail("offset must be finite");
  if (!(drift.period_pulses > 0.0)) fail("drift period must be positive");
  if (!(std::abs(drift.gain_amplitude) < 1.0)) fail("drift gain amplitude must be < 1");
  if (frame_pulses < 1) fail("frame_pulses must be >= 1");
  if (blocked_per_frame < 2) fail("blocked_per_frame must be >= 2");
  if (static_blocked_samples < 2) fail("static_blocked_samples must be >= 2");
}

double DetectorModel::gain_at(double pulse) const {
  if (drift.gain_amplitude == 0.0) return gain;
  return gain *
         (1.0 + drift.gain_amplitude * std::sin(2.0 * std::numbers::pi * pulse / drift.period_pulses));
}

double DetectorModel::offset_at(double pulse) const {
  if (drift.offset_amplitude == 0.0) return offset;
  return offset + drift.offset_amplitude *
                      std::cos(2.0 * std::numbers::pi * pulse / drift.period_pulses);
}

double DetectorModel::effective_efficiency() const {
  const double ratio = electronic_noise_sd * electronic_noise_sd / (0.5 * gain * gain);
  return eta_bhd / (1.0 + ratio);
}

double DetectorModel::noise_sd_for_clearance(double clearance_db, double gain) {
  return gain * std::sqrt(0.5 / std::pow(10.0, clearance_db / 10.0));
}

void hermite_functions(double x, std::span<double> out) {
  if (out.empty()) return;
  static const double kNorm = std::pow(std::numbers::pi, -0.25);
  out[0] = kNorm * std::exp(-0.5 * x * x);
  if (out.size() == 1) return;
  out[1] = std::numbers::sqrt2 * x * out[0];
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    const double nd = static_cast<double>(n);
    out[n + 1] = std::sqrt(2.0 / (nd + 1.0)) * x * out[n] - std::sqrt(nd / (nd + 1.0)) * out[n - 1];
  }
}

double quadrature_pdf(const DensityMatrix& rho, double x) {
  PdfEvaluator eval(rho);
  return eval(x);
}

QuadratureSampler::QuadratureSampler(const DensityMatrix& rho, double step, double half_range)
    : lo_(-half_range), step_(step) {
  if (!(step > 0.0) || !(half_range > 0.0)) {
    throw DomainError("sampler needs positive step and range");
  }
  const auto cells = static_cast<std::size_t>(std::llround(2.0 * half_range / step));
  PdfEvaluator pdf(rho);
  cdf_.resize(cells + 1);
  cdf_[0] = 0.0;
  double left = pdf(lo_);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = lo_ + static_cast<double>(i) * step_;
    const double right = pdf(a + step_);
    const double mass = step_ / 6.0 * (left + 4.0 * pdf(a + 0.5 * step_) + right);
    cdf_[i + 1] = cdf_[i] + mass;
    left = right;
  }
  covered_mass_ = cdf_.back();
  if (!(covered_mass_ > 0.0)) throw DomainError("quadrature density vanishes on the grid");
  for (double& c : cdf_) c /= covered_mass_;
  cdf_.back() = 1.0;
}

double QuadratureSampler::quantile(double u) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  auto idx = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
  idx = std::clamp<std::size_t>(idx, 1, cdf_.size() - 1) - 1;
  const double mass = cdf_[idx + 1] - cdf_[idx];
  const double frac = mass > 0.0 ? (u - cdf_[idx]) / mass : 0.5;
  return lo_ + (static_cast<double>(idx) + frac) * step_;
}

std::vector<double> simulate_pulses(const DensityMatrix& rho, const DetectorModel& detector,
                                    std::int64_t pulses, std::uint64_t seed) {
  detector.validate();
  if (pulses < 1) throw DomainError("simulate_pulses: need at least one pulse");
  const DensityMatrix at_detector = loss_channel(rho, detector.eta_bhd);
  const QuadratureSampler sampler(at_detector);
  std::vector<double> volts(static_cast<std::size_t>(pulses));
  const bool drift = detector.drift.enabled();
  detail::parallel_for(static_cast<std::size_t>(chunk_count(pulses)), [&](std::size_t c) {
    Engine engine(derive_seed(seed, Stream::signal, c));
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t end = std::min(pulses, begin + kChunk);
    for (std::int64_t i = begin; i < end; ++i) {
      const double x = sampler.quantile(uniform_open(engine));
      const double t = static_cast<double>(i);
      double v = drift ? detector.gain_at(t) * x + detector.offset_at(t)
                       : detector.gain * x + detector.offset;
      if (detector.electronic_noise_sd > 0.0) v += detector.electronic_noise_sd * noise(engine);
      volts[static_cast<std::size_t>(i)] = v;
    }
  });
  return volts;
}

std::vector<double> simulate_blocked(const DetectorModel& detector, std::int64_t count,
                                     std::uint64_t seed, double first_pulse, double span) {
  detector.validate();
  if (count < 1) throw DomainError("simulate_blocked: need at least one sample");
  std::vector<double> volts(static_cast<std::size_t>(count));
  const double vacuum_sd = std::sqrt(kRescaleVariance);
  const double spacing = span > 0.0 ? span / static_cast<double>(count) : 0.0;
  detail::parallel_for(static_cast<std::size_t>(chunk_count(count)), [&](std::size_t c) {
    Engine engine(derive_seed(seed, Stream::blocked, c));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t end = std::min(count, begin + kChunk);
    for (std::int64_t i = begin; i < end; ++i) {
      const double t = first_pulse + spacing * static_cast<double>(i);
      const double x = vacuum_sd * normal(engine);
      double v = detector.gain_at(t) * x + detector.offset_at(t);
      if (detector.electronic_noise_sd > 0.0) v += detector.electronic_noise_sd * normal(engine);
      volts[static_cast<std::size_t>(i)] = v;
    }
  });
  return volts;
}

Rescaling fit_rescaling(std::span<const double> blocked, double c1, double c2) {
  if (blocked.size() < 2) throw CalibrationError("blocked-input frame needs >= 2 samples");
  if (!(c2 > 0.0)) throw CalibrationError("target variance C2 must be positive");
  const double n = static_cast<double>(blocked.size());
  double mean = 0.0;
  for (double v : blocked) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : blocked) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) throw CalibrationError("blocked-input frame has zero variance");
  Rescaling r;
  r.scale = std::sqrt(c2 / var);
  r.shift = r.scale * mean - c1;
  return r;
}

std::vector<double> rescale_voltages(std::span<const double> signal,
                                     std::span<const double> blocked, double c1, double c2) {
  const Rescaling r = fit_rescaling(blocked, c1, c2);
  std::vector<double> out(signal.size());
  std::transform(signal.begin(), signal.end(), out.begin(),
                 [&](double v) { return r.apply(v); });
  return out;
}

DataPattern bin_samples(std::span<const double> samples, const BinningSpec& binning) {
  binning.validate();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(binning.n_bins), 0);
  for (double x : samples) ++counts[static_cast<std::size_t>(binning.index_of(x))];
  DataPattern p;
  p.binning = binning;
  p.counts = std::move(counts);
  p.total = static_cast<std::int64_t>(samples.size());
  return p;
}

DataPattern acquire_pattern(const DensityMatrix& rho, const DetectorModel& detector,
                            std::int64_t pulses, const BinningSpec& binning, std::uint64_t seed) {
  binning.validate();
  std::vector<double> volts = simulate_pulses(rho, detector, pulses, seed);
  const std::uint64_t blocked_seed = mix64(seed ^ 0x5bd1e995ULL);
  if (!detector.drift.enabled()) {
    const auto blocked = simulate_blocked(detector, detector.static_blocked_samples, blocked_seed);
    const Rescaling r = fit_rescaling(blocked, kRescaleMean, kRescaleVariance);
    for (double& v : volts) v = r.apply(v);
  } else {
    const std::int64_t frame = detector.frame_pulses;
    for (std::int64_t begin = 0, f = 0; begin < pulses; begin += frame, ++f) {
      const std::int64_t end = std::min(pulses, begin + frame);
      const auto blocked =
          simulate_blocked(detector, detector.blocked_per_frame, mix64(blocked_seed + f),
                           static_cast<double>(begin), static_cast<double>(end - begin));
      const Rescaling r = fit_rescaling(blocked, kRescaleMean, kRescaleVariance);
      for (std::int64_t i = begin; i < end; ++i) {
        auto& v = volts[static_cast<std::size_t>(i)];
        v = r.apply(v);
      }
    }
  }
  return bin_samples(volts, binning);
}

std::vector<RealMatrix> binned_quadrature_projectors(const BinningSpec& binning, int dim) {
  binning.validate();
  if (dim < 1) throw DomainError("cutoff must be positive");
  const double reach =
      std::max({std::abs(binning.lo), std::abs(binning.hi), std::sqrt(2.0 * dim + 1.0)}) + 12.0;
  std::vector<double> psi(static_cast<std::size_t>(dim));
  std::vector<RealMatrix> out;
  out.reserve(static_cast<std::size_t>(binning.n_bins));
  for (int j = 0; j < binning.n_bins; ++j) {
    const double a = j == 0 ? -reach : binning.edge(j);
    const double b = j + 1 == binning.n_bins ? reach : binning.edge(j + 1);
    // Split the clamped tails at the range edge so the quadrature sees the
    // oscillatory core and the decaying tail separately.
    if (j == 0) {
      out.push_back(integrate_projector(a, binning.lo, dim, psi) +
                    integrate_projector(binning.lo, b, dim, psi));
    } else if (j + 1 == binning.n_bins) {
      out.push_back(integrate_projector(a, binning.hi, dim, psi) +
                    integrate_projector(binning.hi, b, dim, psi));
    } else {
      out.push_back(integrate_projector(a, b, dim, psi));
    }
  }
  return out;
}

RealVector bin_probabilities(const DensityMatrix& rho,
                             const std::vector<RealMatrix>& projectors) {
  RealVector p(static_cast<Eigen::Index>(projectors.size()));
  const RealMatrix re = rho.matrix().real();
  for (std::size_t j = 0; j < projectors.size(); ++j) {
    if (projectors[j].rows() != rho.dim()) throw DimensionError("projector cutoff mismatch");
    // Tr(B rho) with B real symmetric: only Re(rho) contributes.
    p(static_cast<Eigen::Index>(j)) = projectors[j].cwiseProduct(re).sum();
  }
  return p;
}

RealVector bin_probabilities(const DensityMatrix& rho, const BinningSpec& binning) {
  return bin_probabilities(rho, binned_quadrature_projectors(binning, rho.dim()));
}

std::vector<DensityMatrix> ProbeSet::states() const {
  std::vector<DensityMatrix> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back(p.state);
  return out;
}

std::vector<DataPattern> ProbeSet::patterns() const {
  std::vector<DataPattern> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back(p.pattern);
  return out;
}

std::vector<double> ProbeSet::effective_amplitudes() const {
  std::vector<double> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back(p.effective_amplitude);
  return out;
}

ProbeSet calibrate_probes(const ProbeLadder& ladder, const DetectorModel& detector,
                          std::int64_t pulses, const BinningSpec& binning, std::uint64_t seed) {
  detector.validate();
  binning.validate();
  ProbeSet set;
  set.dim = ladder.dim;
  set.efficiency = detector.effective_efficiency();
  set.binning = binning;
  const double amp_scale = std::sqrt(set.efficiency);
  for (std::size_t xi = 0; xi < ladder.size(); ++xi) {
    Probe probe;
    probe.amplitude = ladder.amplitudes[xi];
    probe.effective_amplitude = amp_scale * probe.amplitude;
    probe.state = phav_density(probe.effective_amplitude, ladder.dim);
    probe.pattern = acquire_pattern(ladder.states[xi], detector, pulses, binning,
                                    derive_seed(seed, Stream::probe, xi));
    set.probes.push_back(std::move(probe));
  }
  return set;
}

}  // namespace fdptomo
