#include "fdptomo/fdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdptomo/errors.hpp"
#include "fdptomo/nnls.hpp"

namespace fdptomo {

namespace {

constexpr double kRowSumTol = 1e-10;
// Relative eigenvalue level below which a cutting plane is added.
constexpr double kCutTol = 1e-13;

double residual_sq(const FdpProblem& p, const RealVector& a) {
  return (p.patterns.transpose() * a - p.target).squaredNorm();
}

ComplexMatrix weighted_sum(const RealVector& a, std::span<const DensityMatrix> states) {
  const int d = states.front().dim();
  ComplexMatrix s = ComplexMatrix::Zero(d, d);
  for (std::size_t i = 0; i < states.size(); ++i) {
    s.noalias() += a(static_cast<Eigen::Index>(i)) * states[i].matrix();
  }
  return s;
}

double min_hermitian_eigenvalue(const ComplexMatrix& s) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (s + s.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// The admissible set {a : sum(a) = 1, sum_xi a_xi sigma_xi >= 0}.
class AdmissibleSet {
public:
  AdmissibleSet(const FdpProblem& problem, const SolverOptions& options)
      : states_(problem.probe_states),
        m_(problem.probe_count()),
        diagonal_(problem.diagonal_probes() && !options.force_general),
        projection_rounds_(options.projection_rounds),
        psd_tol_(options.psd_tol) {
    if (diagonal_) {
      build_diagonal();
    } else {
      build_general();
    }
  }

  bool diagonal() const { return diagonal_; }
  int size() const { return m_; }

  // Normalised inequality rows G (diagonal path only): G a >= 0.
  const RealMatrix& rows() const { return rows_; }

  RealVector project(const RealVector& y) const {
    return diagonal_ ? project_diagonal(y) : project_general(y);
  }

  double min_eigenvalue(const RealVector& a) const {
    if (diagonal_) {
      const RealVector pops = raw_rows_ * a;
      return pops.minCoeff();
    }
    return min_hermitian_eigenvalue(weighted_sum(a, states_));
  }

  RealVector negative_part_gradient(const RealVector& a, double& penalty) const {
    // d/da ||neg(S(a))||_F^2 = 2 Re Tr(sigma_xi N(a)), N the negative part.
    const ComplexMatrix s = weighted_sum(a, states_);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (s + s.adjoint()));
    const RealVector neg = es.eigenvalues().cwiseMin(0.0);
    penalty = neg.squaredNorm();
    const ComplexMatrix n = es.eigenvectors() * neg.asDiagonal() * es.eigenvectors().adjoint();
    RealVector g(m_);
    for (int i = 0; i < m_; ++i) {
      g(i) = 2.0 * (states_[static_cast<std::size_t>(i)].matrix().cwiseProduct(n.conjugate())).sum().real();
    }
    return g;
  }

private:
  void build_diagonal() {
    const int d = states_.front().dim();
    raw_rows_.resize(d, m_);
    for (int xi = 0; xi < m_; ++xi) {
      raw_rows_.col(xi) = states_[static_cast<std::size_t>(xi)].matrix().diagonal().real();
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index n = 0; n < d; ++n) {
      if (raw_rows_.row(n).norm() > 0.0) keep.push_back(n);
    }
    rows_.resize(static_cast<Eigen::Index>(keep.size()), m_);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const auto r = raw_rows_.row(keep[k]);
      rows_.row(static_cast<Eigen::Index>(k)) = r / r.norm();
    }
    if (m_ > 1) {
      basis_ = tangent_basis(m_);
      reduced_rows_ = rows_ * basis_;
    }
  }

  void build_general() {
    if (m_ > 1) basis_ = tangent_basis(m_);
  }

  // Orthonormal basis of {d : sum(d) = 0}.
  static RealMatrix tangent_basis(int m) {
    Eigen::HouseholderQR<RealMatrix> qr(RealMatrix::Ones(m, 1));
    const RealMatrix q = qr.householderQ();
    return q.rightCols(m - 1);
  }

  static RealVector onto_hyperplane(const RealVector& y) {
    const double shift = (1.0 - y.sum()) / static_cast<double>(y.size());
    return y.array() + shift;
  }

  // Exact Euclidean projection: eliminate sum(a) = 1 through an orthonormal
  // basis of its tangent space, then solve the least-distance problem for
  // the remaining inequalities.
  RealVector project_diagonal(const RealVector& y) const {
    RealVector base = onto_hyperplane(y);
    if (m_ == 1) return base;
    const RealVector slack = rows_ * base;
    if ((slack.array() >= 0.0).all()) return base;
    RealVector u;
    if (!least_distance(reduced_rows_, -slack, u)) {
      throw SolverError("probe combination set is empty: no admissible coefficients");
    }
    return base + basis_ * u;
  }

  // Exact projection by cutting planes: every eigenvector v with a negative
  // eigenvalue of S(a) gives the valid inequality sum_xi a_xi <v|sigma_xi|v>
  // >= 0. The projection onto the polyhedron of cuts collected so far is an
  // LDP problem; it is repeated until S(a) is positive to rounding. Cuts stay
  // valid for every projection, so they are kept between calls.
  RealVector project_general(const RealVector& y) const {
    const RealVector base = onto_hyperplane(y);
    if (m_ == 1) return base;
    RealVector x = base;
    for (int round = 0; round < projection_rounds_; ++round) {
      if (cuts_.rows() > 0) {
        const RealVector slack = cuts_ * base;
        x = base;
        if ((slack.array() < 0.0).any()) {
          RealVector u;
          if (!least_distance(cuts_ * basis_, -slack, u)) {
            throw SolverError("probe combination set is empty: no admissible coefficients");
          }
          x = base + basis_ * u;
        }
      }
      const ComplexMatrix s = weighted_sum(x, states_);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (s + s.adjoint()));
      const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      if (es.eigenvalues().minCoeff() >= -kCutTol * scale) break;
      for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        if (es.eigenvalues()(k) >= -kCutTol * scale) continue;
        const Eigen::VectorXcd v = es.eigenvectors().col(k);
        RealVector row(m_);
        for (int xi = 0; xi < m_; ++xi) {
          row(xi) = v.dot(states_[static_cast<std::size_t>(xi)].matrix() * v).real();
        }
        const double norm = row.norm();
        if (norm == 0.0) continue;
        cuts_.conservativeResize(cuts_.rows() + 1, m_);
        cuts_.row(cuts_.rows() - 1) = row.transpose() / norm;
      }
    }
    return restore_positivity(x);
  }

  RealVector restore_positivity(const RealVector& a) const {
    const double target = -0.25 * psd_tol_;
    if (min_hermitian_eigenvalue(weighted_sum(a, states_)) >= target) return a;
    const RealVector centre = RealVector::Constant(m_, 1.0 / m_);
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      const RealVector trial = (1.0 - mid) * a + mid * centre;
      if (min_hermitian_eigenvalue(weighted_sum(trial, states_)) >= target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return (1.0 - hi) * a + hi * centre;
  }

  std::span<const DensityMatrix> states_;
  int m_;
  bool diagonal_;
  int projection_rounds_;
  double psd_tol_;
  RealMatrix raw_rows_;
  RealMatrix rows_;
  RealMatrix basis_;
  RealMatrix reduced_rows_;
  mutable RealMatrix cuts_;
};

FdpSolution finish(const FdpProblem& problem, const AdmissibleSet& set, RealVector a,
                   int iterations, bool converged, SolverPath path) {
  FdpSolution s;
  s.objective = residual_sq(problem, a);
  s.sum_residual = a.sum() - 1.0;
  s.min_eigenvalue = set.min_eigenvalue(a);
  s.state = DensityMatrix::unchecked(weighted_sum(a, problem.probe_states));
  s.coefficients = std::move(a);
  s.iterations = iterations;
  s.converged = converged;
  s.path = path;
  return s;
}

// Primal active-set refinement on the diagonal path, warm-started from a
// feasible projected-gradient iterate. Each pass minimises E on the face
// {sum(a) = 1, G_A a = 0}; an infeasible face minimiser is cut back to the
// first blocking constraint, which joins the face, and a feasible one whose
// gradient mapping is still large releases the constraint with the most
// negative multiplier. Returns true once the gradient mapping vanishes.
bool refine_on_face(const FdpProblem& problem, const AdmissibleSet& set, const RealMatrix& hessian,
                    const RealVector& linear, double lipschitz, double gradient_tol,
                    RealVector& a) {
  const int m = set.size();
  const RealMatrix& g = set.rows();
  const RealMatrix ft = problem.patterns.transpose();
  const double slack_tol = 1e-13;

  std::vector<Eigen::Index> face;
  const RealVector slack0 = g * a;
  for (Eigen::Index i = 0; i < slack0.size(); ++i) {
    if (slack0(i) <= slack_tol) face.push_back(i);
  }
  const int max_passes = 3 * (m + static_cast<int>(g.rows()));
  for (int pass = 0; pass < max_passes; ++pass) {
    const auto k = static_cast<Eigen::Index>(face.size()) + 1;
    RealMatrix c(k, m);
    c.row(0).setOnes();
    for (std::size_t i = 0; i < face.size(); ++i) c.row(static_cast<Eigen::Index>(i + 1)) = g.row(face[i]);
    RealVector rhs = RealVector::Zero(k);
    rhs(0) = 1.0;

    // z = z0 + N w with N spanning the null space of C.
    const Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(c);
    const RealVector z0 = cod.solve(rhs);
    const Eigen::Index rank = cod.rank();
    RealVector z = z0;
    if (rank < m) {
      const Eigen::ColPivHouseholderQR<RealMatrix> qr(c.transpose());
      const RealMatrix q = qr.householderQ();
      const RealMatrix null = q.rightCols(m - qr.rank());
      const RealVector w = (ft * null).completeOrthogonalDecomposition().solve(problem.target - ft * z0);
      z = z0 + null * w;
    }

    const RealVector slack = g * z;
    const RealVector dir = z - a;
    double t = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      if (slack(i) >= -slack_tol || std::find(face.begin(), face.end(), i) != face.end()) continue;
      const double gi = g.row(i).dot(a);
      const double step = gi / (gi - slack(i));
      if (step < t) {
        t = step;
        blocking = i;
      }
    }
    if (blocking >= 0) {
      a += std::max(t, 0.0) * dir;
      face.push_back(blocking);
      continue;
    }
    a = z;

    const RealVector grad = hessian * a - linear;
    const RealVector mapped = set.project(a - grad / lipschitz);
    if (lipschitz * (a - mapped).norm() <= gradient_tol) return true;
    if (face.empty()) return false;

    // grad = lambda 1 + G_A^T mu with mu >= 0 at a minimiser.
    const RealVector mult = c.transpose().completeOrthogonalDecomposition().solve(grad);
    Eigen::Index worst = 0;
    const double least = mult.tail(k - 1).minCoeff(&worst);
    if (least >= 0.0) return false;
    face.erase(face.begin() + worst);
  }
  return false;
}

}  // namespace

const char* to_string(SolverPath path) {
  switch (path) {
    case SolverPath::projected_gradient: return "projected_gradient";
    case SolverPath::penalty: return "penalty";
  }
  return "unknown";
}

FdpProblem FdpProblem::from_patterns(std::span<const DataPattern> probe_patterns,
                                     const DataPattern& target,
                                     std::vector<DensityMatrix> probe_states) {
  if (probe_patterns.size() != probe_states.size()) {
    std::ostringstream os;
    os << probe_patterns.size() << " probe patterns but " << probe_states.size() << " probe states";
    throw DimensionError(os.str());
  }
  FdpProblem p;
  const auto m = static_cast<Eigen::Index>(probe_patterns.size());
  p.patterns.resize(m, target.binning.n_bins);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& pat = probe_patterns[static_cast<std::size_t>(i)];
    if (!(pat.binning == target.binning)) {
      throw DimensionError("probe and target patterns use different binnings");
    }
    p.patterns.row(i) = pat.frequencies().transpose();
  }
  p.target = target.frequencies();
  p.probe_states = std::move(probe_states);
  p.validate();
  return p;
}

void FdpProblem::validate() const {
  if (patterns.rows() < 1) throw DimensionError("FDP problem needs at least one probe");
  if (patterns.cols() != target.size()) throw DimensionError("pattern/target bin count mismatch");
  if (static_cast<Eigen::Index>(probe_states.size()) != patterns.rows()) {
    throw DimensionError("one probe state per pattern row required");
  }
  const int d = probe_states.front().dim();
  for (const auto& s : probe_states) {
    if (s.dim() != d) throw DimensionError("probe states use different cutoffs");
  }
  for (Eigen::Index i = 0; i < patterns.rows(); ++i) {
    if (std::abs(patterns.row(i).sum() - 1.0) > kRowSumTol) {
      throw DomainError("probe pattern frequencies must sum to 1");
    }
  }
  if (std::abs(target.sum() - 1.0) > kRowSumTol) {
    throw DomainError("target frequencies must sum to 1");
  }
}

bool FdpProblem::diagonal_probes() const {
  return std::all_of(probe_states.begin(), probe_states.end(),
                     [](const DensityMatrix& s) { return s.is_diagonal(); });
}

DensityMatrix assemble_state(const RealVector& coefficients,
                             std::span<const DensityMatrix> probe_states) {
  if (static_cast<std::size_t>(coefficients.size()) != probe_states.size() ||
      probe_states.empty()) {
    throw DimensionError("assemble_state: one coefficient per probe state required");
  }
  const int d = probe_states.front().dim();
  for (const auto& s : probe_states) {
    if (s.dim() != d) throw DimensionError("assemble_state: probe cutoffs differ");
  }
  if (std::abs(coefficients.sum() - 1.0) > 1e-8) {
    std::ostringstream os;
    os << "assemble_state: coefficients sum to " << coefficients.sum();
    throw DomainError(os.str());
  }
  ComplexMatrix s = weighted_sum(coefficients, probe_states);
  s = 0.5 * (s + s.adjoint()).eval();
  return DensityMatrix::unchecked(std::move(s));
}

double objective(const FdpProblem& problem, const RealVector& coefficients) {
  if (coefficients.size() != problem.patterns.rows()) {
    throw DimensionError("objective: one coefficient per probe required");
  }
  return residual_sq(problem, coefficients);
}

FdpSolution solve_projected_gradient(const FdpProblem& problem, const SolverOptions& options) {
  problem.validate();
  const AdmissibleSet set(problem, options);
  const int m = problem.probe_count();
  const RealMatrix& f_mat = problem.patterns;
  const RealMatrix hessian = 2.0 * f_mat * f_mat.transpose();
  const RealVector linear = 2.0 * f_mat * problem.target;
  auto gradient = [&](const RealVector& a) -> RealVector { return hessian * a - linear; };
  auto value = [&](const RealVector& a) { return residual_sq(problem, a); };

  // E is quadratic, so the largest Hessian eigenvalue is the exact Lipschitz
  // constant of its gradient and no step-size search is needed.
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(hessian, Eigen::EigenvaluesOnly);
  const double lipschitz = std::max(es.eigenvalues().maxCoeff() * (1.0 + 1e-12), 1e-300);

  RealVector a = set.project(RealVector::Constant(m, 1.0 / m));
  RealVector a_prev = a;
  double e = value(a);
  double momentum = 1.0;
  bool converged = false;
  constexpr int kFaceSettle = 20;
  constexpr int kFlatRun = 200;
  int flat = 0;
  std::vector<bool> last_face;
  int stable = 0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const RealVector y = a + ((momentum - 1.0) / next_momentum) * (a - a_prev);
    const RealVector candidate = set.project(y - gradient(y) / lipschitz);
    const double e_candidate = value(candidate);
    // Gradient mapping at y; zero exactly at a constrained minimiser.
    const double gm = lipschitz * (y - candidate).norm();
    const double change = std::abs(e - e_candidate);

    // Restart the momentum when the step points against the last move.
    const bool restart = (y - candidate).dot(candidate - a) > 0.0;
    a_prev = a;
    a = candidate;
    e = e_candidate;
    momentum = restart ? 1.0 : next_momentum;

    if (gm <= options.gradient_tol && change <= options.objective_tol) {
      converged = true;
      ++it;
      break;
    }
    // On a curved (non-diagonal) boundary the gradient mapping levels off
    // near sqrt(rounding); accept a long run of rounding-level changes.
    flat = change <= options.objective_tol ? flat + 1 : 0;
    if (flat >= kFlatRun && gm <= std::sqrt(options.gradient_tol)) {
      converged = true;
      ++it;
      break;
    }

    // Once the iterates settle on one face, finish with an exact face solve.
    if (set.diagonal()) {
      const RealVector slack = set.rows() * a;
      std::vector<bool> face(static_cast<std::size_t>(slack.size()));
      for (Eigen::Index i = 0; i < slack.size(); ++i) face[static_cast<std::size_t>(i)] = slack(i) <= 1e-13;
      stable = face == last_face ? stable + 1 : 0;
      last_face = std::move(face);
      if (stable == kFaceSettle) {
        RealVector refined = a;
        const bool optimal =
            refine_on_face(problem, set, hessian, linear, lipschitz, options.gradient_tol, refined);
        if (value(refined) <= e) {
          a = refined;
          a_prev = a;
          e = value(a);
          momentum = 1.0;
        }
        if (optimal) {
          converged = true;
          ++it;
          break;
        }
        stable = -kFaceSettle;
      }
    }
  }
  return finish(problem, set, std::move(a), it, converged, SolverPath::projected_gradient);
}

namespace {

FdpSolution penalty_diagonal(const FdpProblem& problem, const SolverOptions& options,
                             const AdmissibleSet& set) {
  const int m = problem.probe_count();
  const int n_bins = problem.bin_count();
  const RealMatrix& g = set.rows();
  const RealMatrix ft = problem.patterns.transpose();

  auto phi = [&](const RealVector& a, double mu) {
    const RealVector viol = (g * a).cwiseMin(0.0);
    const double s = a.sum() - 1.0;
    return residual_sq(problem, a) + mu * (s * s + viol.squaredNorm());
  };
  auto grad_phi = [&](const RealVector& a, double mu) -> RealVector {
    const RealVector viol = (g * a).cwiseMin(0.0);
    return 2.0 * problem.patterns * (ft * a - problem.target) +
           2.0 * mu * ((a.sum() - 1.0) * RealVector::Ones(m) + g.transpose() * viol);
  };

  RealVector a = RealVector::Constant(m, 1.0 / m);
  int iterations = 0;
  bool settled = true;
  for (double mu = options.penalty_start;; mu *= options.penalty_growth) {
    mu = std::min(mu, options.penalty_max);
    const double root = std::sqrt(mu);
    bool inner_done = false;
    for (int inner = 0; inner < 200 && iterations < options.max_iterations; ++inner, ++iterations) {
      std::vector<Eigen::Index> active;
      const RealVector slack = g * a;
      for (Eigen::Index i = 0; i < slack.size(); ++i) {
        if (slack(i) < 0.0) active.push_back(i);
      }
      // Heavy penalty rows first keeps Householder QR stable.
      const auto rows = static_cast<Eigen::Index>(1 + active.size()) + n_bins;
      RealMatrix lhs(rows, m);
      RealVector rhs = RealVector::Zero(rows);
      lhs.row(0).setConstant(root);
      rhs(0) = root;
      for (std::size_t k = 0; k < active.size(); ++k) {
        lhs.row(static_cast<Eigen::Index>(1 + k)) = root * g.row(active[k]);
      }
      lhs.bottomRows(n_bins) = ft;
      rhs.tail(n_bins) = problem.target;
      const RealVector newton = lhs.completeOrthogonalDecomposition().solve(rhs);
      const RealVector dir = newton - a;

      const double phi0 = phi(a, mu);
      const double slope = grad_phi(a, mu).dot(dir);
      double t = 1.0;
      while (t > 1e-12 && phi(a + t * dir, mu) > phi0 + 1e-4 * t * std::min(slope, 0.0)) t *= 0.5;
      a += t * dir;
      const double drop = phi0 - phi(a, mu);

      std::vector<Eigen::Index> now;
      const RealVector slack_new = g * a;
      for (Eigen::Index i = 0; i < slack_new.size(); ++i) {
        if (slack_new(i) < 0.0) now.push_back(i);
      }
      // Done on a full step with a fixed active set, or once the decrease
      // is at rounding level.
      if ((now == active && t == 1.0) || drop <= 1e-14 * phi0 ||
          (t * dir).norm() <= 1e-15 * (1.0 + a.norm())) {
        inner_done = true;
        ++iterations;
        break;
      }
    }
    settled = settled && inner_done;
    if (mu >= options.penalty_max || iterations >= options.max_iterations) break;
  }
  auto sol = finish(problem, set, std::move(a), iterations, settled, SolverPath::penalty);
  sol.converged = settled && sol.admissible(options.sum_tol, options.psd_tol);
  return sol;
}

FdpSolution penalty_general(const FdpProblem& problem, const SolverOptions& options,
                            const AdmissibleSet& set) {
  const int m = problem.probe_count();
  auto phi_grad = [&](const RealVector& a, double mu, RealVector& grad) {
    double neg = 0.0;
    const RealVector gneg = set.negative_part_gradient(a, neg);
    const RealVector r = problem.patterns.transpose() * a - problem.target;
    const double s = a.sum() - 1.0;
    grad = 2.0 * problem.patterns * r + mu * (2.0 * s * RealVector::Ones(m) + gneg);
    return r.squaredNorm() + mu * (s * s + neg);
  };

  RealVector a = RealVector::Constant(m, 1.0 / m);
  int iterations = 0;
  bool settled = true;
  for (double mu = options.penalty_start;; mu *= options.penalty_growth) {
    mu = std::min(mu, options.penalty_max);
    RealVector grad;
    double phi = phi_grad(a, mu, grad);
    double step = 1.0 / (2.0 * (problem.patterns.squaredNorm() + mu * (m + 1.0)));
    RealVector prev_a = a;
    RealVector prev_g = grad;
    bool done = false;
    for (int k = 0; k < 20000 && iterations < options.max_iterations; ++k, ++iterations) {
      // Barzilai-Borwein step with Armijo backtracking.
      RealVector trial;
      RealVector trial_grad;
      double trial_phi = 0.0;
      double t = step;
      for (int bt = 0; bt < 60; ++bt) {
        trial = a - t * grad;
        trial_phi = phi_grad(trial, mu, trial_grad);
        if (trial_phi <= phi - 1e-4 * t * grad.squaredNorm()) break;
        t *= 0.5;
      }
      prev_a = a;
      prev_g = grad;
      a = trial;
      grad = trial_grad;
      const double drop = phi - trial_phi;
      phi = trial_phi;
      const RealVector sdiff = a - prev_a;
      const RealVector ydiff = grad - prev_g;
      const double sy = sdiff.dot(ydiff);
      step = sy > 0.0 ? sdiff.squaredNorm() / sy : t;
      if (grad.norm() <= 1e-13 || drop <= 1e-20) {
        done = true;
        break;
      }
    }
    settled = settled && done;
    if (mu >= options.penalty_max || iterations >= options.max_iterations) break;
  }
  auto sol = finish(problem, set, std::move(a), iterations, settled, SolverPath::penalty);
  sol.converged = settled && sol.admissible(options.sum_tol, options.psd_tol);
  return sol;
}

}  // namespace

FdpSolution solve_penalty(const FdpProblem& problem, const SolverOptions& options) {
  problem.validate();
  const AdmissibleSet set(problem, options);
  return set.diagonal() ? penalty_diagonal(problem, options, set)
                        : penalty_general(problem, options, set);
}

FdpSolution fdp_fit(const FdpProblem& problem, const SolverOptions& options) {
  FdpSolution primary = solve_projected_gradient(problem, options);
  if (!options.cross_check) {
    if (!primary.admissible(options.sum_tol, options.psd_tol)) {
      std::ostringstream os;
      os << "FDP fit is not admissible: sum residual " << primary.sum_residual
         << ", min eigenvalue " << primary.min_eigenvalue;
      throw SolverError(os.str());
    }
    return primary;
  }
  FdpSolution check = solve_penalty(problem, options);
  const bool ok_primary = primary.admissible(options.sum_tol, options.psd_tol);
  const bool ok_check = check.admissible(options.sum_tol, options.psd_tol);
  if (!ok_primary && !ok_check) {
    std::ostringstream os;
    os << "FDP fit failed on both solver paths: projected gradient (sum residual "
       << primary.sum_residual << ", min eigenvalue " << primary.min_eigenvalue
       << "), penalty (sum residual " << check.sum_residual << ", min eigenvalue "
       << check.min_eigenvalue << ")";
    throw SolverError(os.str());
  }
  bool take_check = false;
  if (!ok_primary) {
    take_check = true;
  } else if (ok_check) {
    const double gap = check.objective - primary.objective;
    if (gap < -1e-12) {
      take_check = true;
    } else if (std::abs(gap) <= 1e-12) {
      take_check = check.coefficients.norm() < primary.coefficients.norm();
    }
  }
  FdpSolution& winner = take_check ? check : primary;
  const FdpSolution& other = take_check ? primary : check;
  winner.cross_check_objective = other.objective;
  return winner;
}

RealVector residuals(const FdpProblem& problem, const FdpSolution& solution) {
  return problem.target - problem.patterns.transpose() * solution.coefficients;
}

RealVector noise_envelope(const DataPattern& target, double sigmas) {
  RealVector env(static_cast<Eigen::Index>(target.counts.size()));
  const double k = static_cast<double>(target.total);
  for (std::size_t i = 0; i < target.counts.size(); ++i) {
    env(static_cast<Eigen::Index>(i)) = sigmas * std::sqrt(static_cast<double>(target.counts[i])) / k;
  }
  return env;
}

}  // namespace fdptomo
