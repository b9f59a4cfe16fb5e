#pragma once

#include <Eigen/Dense>

namespace fdptomo {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

/// Least-distance programming: min ||x|| subject to G x >= h, reduced to one
/// NNLS problem. Returns false when the constraints are infeasible.
bool least_distance(const Eigen::MatrixXd& g, const Eigen::VectorXd& h, Eigen::VectorXd& x);

}  // namespace fdptomo
