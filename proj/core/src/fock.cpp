#include "fdptomo/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fdptomo/errors.hpp"

namespace fdptomo {

namespace {

void require_square(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError("density matrix must be square and non-empty");
  }
}

// binom[n][l] = C(n, l) eta^(n-l) (1-eta)^l
std::vector<std::vector<double>> binomial_weights(int dim, double eta) {
  std::vector<std::vector<double>> w(dim);
  std::vector<double> row{1.0};
  for (int n = 0; n < dim; ++n) {
    if (n > 0) {
      std::vector<double> next(n + 1);
      next[0] = 1.0;
      next[n] = 1.0;
      for (int k = 1; k < n; ++k) next[k] = row[k - 1] + row[k];
      row = std::move(next);
    }
    w[n].resize(n + 1);
    for (int l = 0; l <= n; ++l) {
      w[n][l] = row[l] * std::pow(eta, n - l) * std::pow(1.0 - eta, l);
    }
  }
  return w;
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    std::ostringstream os;
    os << "loss transmission must lie in [0,1], got " << eta;
    throw DomainError(os.str());
  }
}

}  // namespace

bool ValidityReport::hermitian() const {
  return hermiticity_error <= DensityMatrix::kHermitianTol;
}
bool ValidityReport::unit_trace() const {
  return trace_error <= DensityMatrix::kTraceTol;
}
bool ValidityReport::positive() const {
  return min_eigenvalue >= -DensityMatrix::kPsdTol;
}

DensityMatrix::DensityMatrix(ComplexMatrix elements, NoCheck)
    : elements_(std::move(elements)) {
  require_square(elements_);
}

DensityMatrix::DensityMatrix(ComplexMatrix elements)
    : DensityMatrix(std::move(elements), NoCheck{}) {
  const auto report = check();
  if (!report.valid()) {
    std::ostringstream os;
    os << "not a density matrix: hermiticity error " << report.hermiticity_error
       << ", trace error " << report.trace_error << ", min eigenvalue "
       << report.min_eigenvalue;
    throw DomainError(os.str());
  }
}

DensityMatrix DensityMatrix::unchecked(ComplexMatrix elements) {
  return DensityMatrix(std::move(elements), NoCheck{});
}

DensityMatrix DensityMatrix::diagonal(const RealVector& populations) {
  const auto d = populations.size();
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = populations(i);
  return DensityMatrix(std::move(m));
}

bool DensityMatrix::is_diagonal() const {
  for (int i = 0; i < dim(); ++i) {
    for (int j = 0; j < dim(); ++j) {
      if (i != j && elements_(i, j) != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

ValidityReport DensityMatrix::check() const {
  ValidityReport r;
  r.hermiticity_error = (elements_ - elements_.adjoint()).cwiseAbs().maxCoeff();
  r.trace_error = std::abs(elements_.trace() - Complex(1.0, 0.0));
  r.min_eigenvalue = min_eigenvalue();
  return r;
}

RealVector DensityMatrix::eigenvalues() const {
  if (is_diagonal()) {
    RealVector ev = elements_.diagonal().real();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
  }
  const ComplexMatrix h = 0.5 * (elements_ + elements_.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double DensityMatrix::min_eigenvalue() const { return eigenvalues().minCoeff(); }

double WignerGrid::integral() const {
  if (x_values.size() < 2 || p_values.size() < 2) return 0.0;
  const double dx = x_values[1] - x_values[0];
  const double dp = p_values[1] - p_values[0];
  return values.sum() * dx * dp;
}

DensityMatrix fock_state(int n, int dim) {
  if (dim < 1 || n < 0 || n >= dim) {
    std::ostringstream os;
    os << "Fock index " << n << " outside cutoff " << dim;
    throw DomainError(os.str());
  }
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(n, n) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix maximally_mixed(int dim) {
  if (dim < 1) throw DomainError("cutoff must be positive");
  return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix pure_state(const Eigen::VectorXcd& amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) throw DomainError("pure_state: zero vector");
  const Eigen::VectorXcd psi = amplitudes / norm;
  ComplexMatrix m = psi * psi.adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(std::move(m));
}

DensityMatrix resize_cutoff(const DensityMatrix& rho, int new_dim) {
  if (new_dim < 1) throw DomainError("cutoff must be positive");
  const int keep = std::min(rho.dim(), new_dim);
  ComplexMatrix m = ComplexMatrix::Zero(new_dim, new_dim);
  m.topLeftCorner(keep, keep) = rho.matrix().topLeftCorner(keep, keep);
  const Complex tr = m.trace();
  if (std::abs(tr) <= 0.0) throw DomainError("resize_cutoff: no weight left");
  m /= tr.real();
  return DensityMatrix(std::move(m));
}

DensityMatrix loss_channel(const DensityMatrix& rho, double eta) {
  check_eta(eta);
  const int d = rho.dim();
  const auto w = binomial_weights(d, eta);
  const ComplexMatrix& in = rho.matrix();
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  // out(m-l, n-l) += sqrt(w[m][l] w[n][l]) in(m, n)
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      const Complex v = in(m, n);
      if (v == Complex(0.0, 0.0)) continue;
      const int lmax = std::min(m, n);
      for (int l = 0; l <= lmax; ++l) {
        out(m - l, n - l) += std::sqrt(w[m][l] * w[n][l]) * v;
      }
    }
  }
  return DensityMatrix(std::move(out));
}

ComplexMatrix loss_channel_adjoint(const ComplexMatrix& observable, double eta) {
  check_eta(eta);
  if (observable.rows() != observable.cols()) {
    throw DimensionError("loss_channel_adjoint: square operator required");
  }
  const int d = static_cast<int>(observable.rows());
  const auto w = binomial_weights(d, eta);
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  // <m|E_l^dag X E_l|n> = sqrt(w[m][l] w[n][l]) X(m-l, n-l)
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      Complex acc = 0.0;
      const int lmax = std::min(m, n);
      for (int l = 0; l <= lmax; ++l) {
        acc += std::sqrt(w[m][l] * w[n][l]) * observable(m - l, n - l);
      }
      out(m, n) = acc;
    }
  }
  return out;
}

RealVector photon_statistics(const DensityMatrix& rho) {
  return rho.matrix().diagonal().real();
}

double mean_photon_number(const DensityMatrix& rho) {
  const RealVector p = photon_statistics(rho);
  double mean = 0.0;
  for (Eigen::Index n = 0; n < p.size(); ++n) mean += static_cast<double>(n) * p(n);
  return mean;
}

ComplexMatrix hermitian_sqrt(const ComplexMatrix& m) {
  const ComplexMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const double floor = static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() *
                       std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  const RealVector roots =
      es.eigenvalues().unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << "fidelity: cutoff mismatch " << a.dim() << " vs " << b.dim();
    throw DimensionError(os.str());
  }
  double root_sum = 0.0;
  if (a.is_diagonal() && b.is_diagonal()) {
    for (int n = 0; n < a.dim(); ++n) {
      root_sum += std::sqrt(std::max(a(n, n).real(), 0.0) * std::max(b(n, n).real(), 0.0));
    }
  } else {
    // Tr sqrt(sqrt(a) b sqrt(a)) is the trace norm of sqrt(a) sqrt(b). Its
    // singular values carry absolute rounding error only, whereas square
    // roots of near-zero eigenvalues would amplify it to ~1e-8.
    const ComplexMatrix prod = hermitian_sqrt(a.matrix()) * hermitian_sqrt(b.matrix());
    root_sum = Eigen::JacobiSVD<ComplexMatrix>(prod).singularValues().sum();
  }
  return std::clamp(root_sum * root_sum, 0.0, 1.0);
}

// Upward recurrence over the Laguerre-type terms W_mn(x, p); every term is
// built from its two predecessors, so no factorials or explicit polynomials
// appear and the scheme stays stable for the cutoffs used here.
double wigner_point(const DensityMatrix& rho, double x, double p) {
  const int d = rho.dim();
  const ComplexMatrix& r = rho.matrix();
  const Complex a(x / std::numbers::sqrt2, p / std::numbers::sqrt2);
  std::vector<Complex> w(d);
  w[0] = std::exp(-2.0 * std::norm(a)) / std::numbers::pi;
  double value = r(0, 0).real() * w[0].real();
  for (int n = 1; n < d; ++n) {
    w[n] = 2.0 * a * w[n - 1] / std::sqrt(static_cast<double>(n));
    value += 2.0 * (r(0, n) * w[n]).real();
  }
  for (int m = 1; m < d; ++m) {
    const double sm = std::sqrt(static_cast<double>(m));
    Complex temp = w[m];
    w[m] = (2.0 * std::conj(a) * temp - sm * w[m - 1]) / sm;
    value += (r(m, m) * w[m]).real();
    for (int n = m + 1; n < d; ++n) {
      const Complex next = (2.0 * a * w[n - 1] - sm * temp) / std::sqrt(static_cast<double>(n));
      temp = w[n];
      w[n] = next;
      value += 2.0 * (r(m, n) * w[n]).real();
    }
  }
  return value;
}

WignerGrid wigner(const DensityMatrix& rho, std::span<const double> x_values,
                  std::span<const double> p_values) {
  WignerGrid grid;
  grid.x_values.assign(x_values.begin(), x_values.end());
  grid.p_values.assign(p_values.begin(), p_values.end());
  grid.values.resize(static_cast<Eigen::Index>(x_values.size()),
                     static_cast<Eigen::Index>(p_values.size()));
  for (std::size_t i = 0; i < x_values.size(); ++i) {
    for (std::size_t j = 0; j < p_values.size(); ++j) {
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          wigner_point(rho, x_values[i], p_values[j]);
    }
  }
  return grid;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) return {};
  if (n == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(n));
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + step * i;
  v.back() = hi;
  return v;
}

}  // namespace fdptomo
