#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fdptomo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Default Fock cutoff D (basis |0>..|D-1>).
inline constexpr int kDefaultCutoff = 20;

/// Largest probability mass a state may place beyond the cutoff before
/// construction is refused.
inline constexpr double kMaxTruncationLeakage = 1e-6;

/// Deviations of a matrix from the density-operator conditions.
struct ValidityReport {
  double hermiticity_error = 0.0;  ///< max |rho_mn - conj(rho_nm)|
  double trace_error = 0.0;        ///< |Tr rho - 1|
  double min_eigenvalue = 0.0;

  bool hermitian() const;
  bool unit_trace() const;
  bool positive() const;
  bool valid() const { return hermitian() && unit_trace() && positive(); }
};

/// Hermitian, positive semidefinite, unit-trace operator on the truncated
/// Fock space spanned by |0>..|dim-1>.
///
/// The checked constructor enforces all three conditions. `unchecked` skips
/// positivity and trace (it still requires a square matrix) for intermediate
/// objects such as a coefficient-weighted probe sum whose positivity is
/// certified later by the caller.
class DensityMatrix {
public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kPsdTol = 1e-9;

  /// Validates; throws DomainError if any invariant fails.
  explicit DensityMatrix(ComplexMatrix elements);

  static DensityMatrix unchecked(ComplexMatrix elements);
  /// Diagonal state with the given photon-number distribution (validated).
  static DensityMatrix diagonal(const RealVector& populations);

  int dim() const { return static_cast<int>(elements_.rows()); }
  const ComplexMatrix& matrix() const { return elements_; }
  Complex operator()(int m, int n) const { return elements_(m, n); }

  /// True when every off-diagonal element is exactly zero.
  bool is_diagonal() const;
  ValidityReport check() const;
  RealVector eigenvalues() const;
  double min_eigenvalue() const;

  friend bool operator==(const DensityMatrix& a, const DensityMatrix& b) {
    return a.elements_ == b.elements_;
  }

private:
  struct NoCheck {};
  DensityMatrix(ComplexMatrix elements, NoCheck);
  ComplexMatrix elements_;
};

/// Sampled Wigner function, values(i, j) = W(x[i], p[j]).
struct WignerGrid {
  std::vector<double> x_values;
  std::vector<double> p_values;
  RealMatrix values;

  /// Riemann sum of W over the (uniform) grid.
  double integral() const;
};

/// |n><n| in a cutoff-`dim` basis. Throws DomainError when n >= dim.
DensityMatrix fock_state(int n, int dim);
DensityMatrix maximally_mixed(int dim);
/// |psi><psi| for an unnormalised amplitude vector.
DensityMatrix pure_state(const Eigen::VectorXcd& amplitudes);

/// Pads with zeros (new_dim > dim) or truncates and renormalises.
DensityMatrix resize_cutoff(const DensityMatrix& rho, int new_dim);

/// Bernoulli photon loss with transmission eta, applied through its Kraus
/// operators E_l = sum_n sqrt(C(n,l) eta^(n-l) (1-eta)^l) |n-l><n|.
DensityMatrix loss_channel(const DensityMatrix& rho, double eta);

/// Heisenberg-picture (adjoint) loss map acting on an observable or POVM
/// element: X -> sum_l E_l^dagger X E_l.
ComplexMatrix loss_channel_adjoint(const ComplexMatrix& observable, double eta);

/// P(n) = <n|rho|n>.
RealVector photon_statistics(const DensityMatrix& rho);
double mean_photon_number(const DensityMatrix& rho);

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Eigenvalues below dim * epsilon * (largest eigenvalue) are rounding noise
/// and are set to zero before the root is taken.
ComplexMatrix hermitian_sqrt(const ComplexMatrix& m);

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2, clipped to [0,1].
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

/// Wigner function at one phase-space point. Convention: x = (a + a^dag)/sqrt2,
/// so the vacuum is exp(-x^2 - p^2)/pi.
double wigner_point(const DensityMatrix& rho, double x, double p);
WignerGrid wigner(const DensityMatrix& rho, std::span<const double> x_values,
                  std::span<const double> p_values);

/// n uniformly spaced values covering [lo, hi] inclusive.
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace fdptomo
