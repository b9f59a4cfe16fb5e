#pragma once

#include <vector>

#include "fdptomo/fock.hpp"
#include "fdptomo/homodyne.hpp"

namespace fdptomo {

/// Quadrature-bin POVM referred to the detector input: each element is the
/// bin integral of |x><x| pulled back through the loss channel.
struct BinnedPovm {
  BinningSpec binning;
  double eta = 1.0;
  std::vector<RealMatrix> elements;

  int dim() const { return elements.empty() ? 0 : static_cast<int>(elements.front().rows()); }
  /// diagonals()(j, n) = <n|Pi_j|n>.
  RealMatrix diagonals() const;
  /// Largest |sum_j Pi_j - 1| entry.
  double completeness_error() const;
};

/// Throws DomainError unless eta lies in (0, 1].
BinnedPovm build_binned_povm(const BinningSpec& binning, int dim, double eta);

struct MlOptions {
  int max_iterations = 50000;
  /// Stop once the relative log-likelihood change falls below relative_tol
  /// and the stationarity measure below stationarity_tol.
  double relative_tol = 1e-11;
  double stationarity_tol = 5e-9;
  double probability_floor = 1e-12;
  /// Restrict to states diagonal in the Fock basis.
  bool diagonal = true;

  friend bool operator==(const MlOptions&, const MlOptions&) = default;
};

struct MlResult {
  DensityMatrix state = fock_state(0, 1);
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  /// ||rho R - Tr(rho R) rho||_F at the returned state; zero at a stationary
  /// point of the likelihood on the state space.
  double stationarity = 0.0;
};

/// sum_j f_j log max(Tr(Pi_j rho), floor) over bins with f_j > 0.
double log_likelihood(const RealVector& frequencies, const BinnedPovm& povm,
                      const DensityMatrix& rho, double floor = 1e-12);

/// Predicted bin probabilities Tr(Pi_j rho).
RealVector predicted_probabilities(const BinnedPovm& povm, const DensityMatrix& rho);

/// Maximum-likelihood state by diluted R-rho-R iteration. The dilution is
/// adapted every step so the log-likelihood never decreases.
MlResult ml_reconstruct(const DataPattern& pattern, const BinnedPovm& povm,
                        const MlOptions& options = {});

}  // namespace fdptomo
