#ifndef WATTCAST_NNLS_HPP
#define WATTCAST_NNLS_HPP

#include <Eigen/Dense>

namespace wattcast {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Non-negative least squares, Lawson-Hanson active-set method.
/// Deterministic: ties in the gradient pick the lowest column index.
/// tol < 0 selects a scale-aware default.
NnlsResult nnls(const Eigen::MatrixXd &A, const Eigen::VectorXd &b, double tol = -1.0);

} // namespace wattcast

#endif // WATTCAST_NNLS_HPP
