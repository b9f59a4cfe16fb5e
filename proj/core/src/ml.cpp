#include "fdptomo/ml.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdptomo/errors.hpp"

namespace fdptomo {

RealMatrix BinnedPovm::diagonals() const {
  RealMatrix d(static_cast<Eigen::Index>(elements.size()), dim());
  for (std::size_t j = 0; j < elements.size(); ++j) {
    d.row(static_cast<Eigen::Index>(j)) = elements[j].diagonal().transpose();
  }
  return d;
}

double BinnedPovm::completeness_error() const {
  if (elements.empty()) return 0.0;
  RealMatrix sum = RealMatrix::Zero(dim(), dim());
  for (const auto& e : elements) sum += e;
  return (sum - RealMatrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

BinnedPovm build_binned_povm(const BinningSpec& binning, int dim, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    std::ostringstream os;
    os << "POVM efficiency must lie in (0,1], got " << eta;
    throw DomainError(os.str());
  }
  BinnedPovm povm;
  povm.binning = binning;
  povm.eta = eta;
  povm.elements = binned_quadrature_projectors(binning, dim);
  if (eta < 1.0) {
    for (auto& e : povm.elements) {
      e = loss_channel_adjoint(e.cast<Complex>(), eta).real();
    }
  }
  return povm;
}

RealVector predicted_probabilities(const BinnedPovm& povm, const DensityMatrix& rho) {
  if (rho.dim() != povm.dim()) throw DimensionError("state and POVM cutoffs differ");
  return bin_probabilities(rho, povm.elements);
}

double log_likelihood(const RealVector& frequencies, const BinnedPovm& povm,
                      const DensityMatrix& rho, double floor) {
  if (frequencies.size() != static_cast<Eigen::Index>(povm.elements.size())) {
    throw DimensionError("frequency vector and POVM sizes differ");
  }
  const RealVector p = predicted_probabilities(povm, rho);
  double l = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (frequencies(j) > 0.0) l += frequencies(j) * std::log(std::max(p(j), floor));
  }
  return l;
}

namespace {

double weighted_log(const RealVector& f, const RealVector& p, double floor) {
  double l = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (f(j) > 0.0) l += f(j) * std::log(std::max(p(j), floor));
  }
  return l;
}

RealVector ratio_weights(const RealVector& f, const RealVector& p, double floor) {
  RealVector w(f.size());
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    w(j) = f(j) > 0.0 ? f(j) / std::max(p(j), floor) : 0.0;
  }
  return w;
}

double diagonal_stationarity(const RealMatrix& pd, const RealVector& f, const RealVector& p,
                             const RealVector& q, double floor) {
  const RealVector r = pd.transpose() * ratio_weights(f, p, floor);
  const RealVector g = q.array() * r.array();
  return (g - g.sum() * q).norm();
}

ComplexMatrix operator_r(const BinnedPovm& povm, const RealVector& w) {
  RealMatrix r = RealMatrix::Zero(povm.dim(), povm.dim());
  for (std::size_t j = 0; j < povm.elements.size(); ++j) {
    const double wj = w(static_cast<Eigen::Index>(j));
    if (wj != 0.0) r += wj * povm.elements[j];
  }
  return r.cast<Complex>();
}

double full_stationarity(const BinnedPovm& povm, const RealVector& f, const RealVector& p,
                         const ComplexMatrix& rho, double floor) {
  const ComplexMatrix g = rho * operator_r(povm, ratio_weights(f, p, floor));
  return (g - g.trace() * rho).norm();
}

constexpr double kMaxDilution = 1e6;
constexpr int kMaxHalvings = 60;

MlResult reconstruct_diagonal(const RealVector& f, const BinnedPovm& povm,
                              const MlOptions& options) {
  const int d = povm.dim();
  const RealMatrix pd = povm.diagonals();
  RealVector q = RealVector::Constant(d, 1.0 / d);
  RealVector p = pd * q;
  double l = weighted_log(f, p, options.probability_floor);
  double eps = 1.0;
  MlResult res;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const RealVector r = pd.transpose() * ratio_weights(f, p, options.probability_floor);
    RealVector q_new;
    RealVector p_new;
    double l_new = l;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const RealVector scale = (1.0 + eps * r.array()) / (1.0 + eps);
      q_new = q.array() * scale.array().square();
      q_new /= q_new.sum();
      p_new = pd * q_new;
      l_new = weighted_log(f, p_new, options.probability_floor);
      if (l_new >= l) {
        accepted = true;
        break;
      }
      eps *= 0.5;
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    const double change = l_new - l;
    q = q_new;
    p = p_new;
    l = l_new;
    eps = std::min(2.0 * eps, kMaxDilution);
    if (change <= options.relative_tol * std::max(std::abs(l), 1e-300) &&
        diagonal_stationarity(pd, f, p, q, options.probability_floor) <= options.stationarity_tol) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.stationarity = diagonal_stationarity(pd, f, p, q, options.probability_floor);
  res.state = DensityMatrix::diagonal(q);
  res.log_likelihood = l;
  res.iterations = it;
  return res;
}

MlResult reconstruct_full(const RealVector& f, const BinnedPovm& povm, const MlOptions& options) {
  const int d = povm.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  ComplexMatrix rho = id / static_cast<double>(d);
  auto probs = [&](const ComplexMatrix& m) {
    return bin_probabilities(DensityMatrix::unchecked(m), povm.elements);
  };
  RealVector p = probs(rho);
  double l = weighted_log(f, p, options.probability_floor);
  double eps = 1.0;
  MlResult res;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const ComplexMatrix r = operator_r(povm, ratio_weights(f, p, options.probability_floor));
    ComplexMatrix rho_new;
    RealVector p_new;
    double l_new = l;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const ComplexMatrix re = (id + eps * r) / (1.0 + eps);
      rho_new = re * rho * re;
      rho_new = 0.5 * (rho_new + rho_new.adjoint()).eval();
      rho_new /= rho_new.trace().real();
      p_new = probs(rho_new);
      l_new = weighted_log(f, p_new, options.probability_floor);
      if (l_new >= l) {
        accepted = true;
        break;
      }
      eps *= 0.5;
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    const double change = l_new - l;
    rho = rho_new;
    p = p_new;
    l = l_new;
    eps = std::min(2.0 * eps, kMaxDilution);
    if (change <= options.relative_tol * std::max(std::abs(l), 1e-300) &&
        full_stationarity(povm, f, p, rho, options.probability_floor) <= options.stationarity_tol) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.stationarity = full_stationarity(povm, f, p, rho, options.probability_floor);
  res.state = DensityMatrix(rho);
  res.log_likelihood = l;
  res.iterations = it;
  return res;
}

}  // namespace

MlResult ml_reconstruct(const DataPattern& pattern, const BinnedPovm& povm,
                        const MlOptions& options) {
  if (!(pattern.binning == povm.binning)) {
    throw DimensionError("pattern and POVM use different binnings");
  }
  if (pattern.total <= 0) throw DomainError("empty data pattern");
  if (options.max_iterations < 1) throw DomainError("ML iteration cap must be positive");
  const RealVector f = pattern.frequencies();
  return options.diagonal ? reconstruct_diagonal(f, povm, options)
                          : reconstruct_full(f, povm, options);
}

}  // namespace fdptomo
