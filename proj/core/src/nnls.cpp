#include "fdptomo/nnls.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace fdptomo {

namespace {

// Least-squares solution on the passive columns, zero elsewhere.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(a.cols());
  if (cols.empty()) return z;
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  const Eigen::VectorXd s = sub.completeOrthogonalDecomposition().solve(b);
  for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = s(static_cast<Eigen::Index>(k));
  return z;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
  const Eigen::Index n = a.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(30 * std::max<Eigen::Index>(n, 1));
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     std::max(a.cwiseAbs().maxCoeff(), 1e-300) *
                     static_cast<double>(std::max(a.rows(), n));

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd w = a.transpose() * (b - a * res.x);

  int iter = 0;
  while (iter < max_iterations) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) {
      res.converged = true;
      break;
    }
    passive[static_cast<std::size_t>(t)] = true;

    while (iter++ < max_iterations) {
      Eigen::VectorXd z = passive_solve(a, b, passive);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      }
      if (feasible) {
        res.x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = res.x(j) - z(j);
          if (denom > 0.0) alpha = std::min(alpha, res.x(j) / denom);
        }
      }
      res.x += alpha * (z - res.x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && res.x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          res.x(j) = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * res.x);
  }
  res.iterations = iter;
  res.residual_norm = (a * res.x - b).norm();
  return res;
}

bool least_distance(const Eigen::MatrixXd& g, const Eigen::VectorXd& h, Eigen::VectorXd& x) {
  const Eigen::Index m = g.rows();
  const Eigen::Index n = g.cols();
  x = Eigen::VectorXd::Zero(n);
  if (m == 0 || (h.array() <= 0.0).all()) return true;

  // E = [G^T; h^T], f = e_{n+1}; x = -r_{1..n} / r_{n+1} with r = E u - f.
  Eigen::MatrixXd e(n + 1, m);
  e.topRows(n) = g.transpose();
  e.row(n) = h.transpose();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n + 1);
  f(n) = 1.0;
  const NnlsResult sol = nnls(e, f);
  const Eigen::VectorXd r = e * sol.x - f;
  if (r.norm() <= 1e-14 || std::abs(r(n)) <= 1e-300) return false;
  x = -r.head(n) / r(n);
  return true;
}

}  // namespace fdptomo
