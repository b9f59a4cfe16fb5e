#pragma once

#include <limits>
#include <span>
#include <vector>

#include "fdptomo/fock.hpp"
#include "fdptomo/homodyne.hpp"

namespace fdptomo {

/// Data-pattern fit: probe frequency rows F (M x N), the unknown state's
/// frequencies f (N) and the probe density matrices.
struct FdpProblem {
  RealMatrix patterns;
  RealVector target;
  std::vector<DensityMatrix> probe_states;

  /// Builds the problem from measured histograms. Throws DimensionError when
  /// the binnings differ or the probe/state counts disagree.
  static FdpProblem from_patterns(std::span<const DataPattern> probe_patterns,
                                  const DataPattern& target,
                                  std::vector<DensityMatrix> probe_states);

  void validate() const;
  int probe_count() const { return static_cast<int>(patterns.rows()); }
  int bin_count() const { return static_cast<int>(patterns.cols()); }
  int dim() const { return probe_states.empty() ? 0 : probe_states.front().dim(); }
  /// True when every probe is diagonal in the Fock basis, so positivity of
  /// the combination reduces to one linear inequality per photon number.
  bool diagonal_probes() const;
};

enum class SolverPath {
  projected_gradient,  ///< accelerated projected gradient with exact projections
  penalty,             ///< quadratic-penalty continuation (cross-check)
};

const char* to_string(SolverPath path);

struct SolverOptions {
  int max_iterations = 100000;
  double objective_tol = 1e-14;
  /// Stop when the gradient-mapping norm falls below this as well.
  double gradient_tol = 1e-11;
  double sum_tol = 1e-8;
  double psd_tol = 1e-8;
  /// Also run the penalty path and keep the better admissible answer.
  bool cross_check = true;
  /// Treat probes as general Hermitian operators even when diagonal.
  bool force_general = false;
  double penalty_start = 1e2;
  double penalty_growth = 10.0;
  double penalty_max = 1e12;
  /// Cutting-plane rounds per projection for non-diagonal probes.
  int projection_rounds = 500;

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

struct FdpSolution {
  RealVector coefficients;
  double objective = 0.0;
  DensityMatrix state = fock_state(0, 1);
  double min_eigenvalue = 0.0;
  double sum_residual = 0.0;  ///< sum(a) - 1
  int iterations = 0;
  bool converged = false;
  SolverPath path = SolverPath::projected_gradient;
  /// Objective reached by the other path when cross-checking, NaN otherwise.
  double cross_check_objective = std::numeric_limits<double>::quiet_NaN();

  bool admissible(double sum_tol = 1e-8, double psd_tol = 1e-8) const {
    return std::abs(sum_residual) <= sum_tol && min_eigenvalue >= -psd_tol;
  }
};

/// sum_xi a_xi sigma_xi. Hermitian by construction; positivity is the
/// caller's concern. Throws DimensionError on length mismatch and
/// DomainError when the coefficients do not sum to one within 1e-8.
DensityMatrix assemble_state(const RealVector& coefficients,
                             std::span<const DensityMatrix> probe_states);

/// E(a) = sum_n (f_n - sum_xi a_xi F_xi,n)^2
double objective(const FdpProblem& problem, const RealVector& coefficients);

/// Constrained fit: minimise E subject to sum(a) = 1 and a positive
/// semidefinite combination. Runs the projected-gradient path and, when
/// cross-checking, the penalty path too; returns the admissible answer with
/// the lower objective (the smaller-norm one on a tie).
FdpSolution fdp_fit(const FdpProblem& problem, const SolverOptions& options = {});

FdpSolution solve_projected_gradient(const FdpProblem& problem, const SolverOptions& options = {});
FdpSolution solve_penalty(const FdpProblem& problem, const SolverOptions& options = {});

/// f_n - sum_xi a_xi F_xi,n
RealVector residuals(const FdpProblem& problem, const FdpSolution& solution);

/// sigmas * sqrt(N_n) / K for every bin of the measured target.
RealVector noise_envelope(const DataPattern& target, double sigmas = 3.0);

}  // namespace fdptomo
