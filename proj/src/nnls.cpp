#include "wattcast/nnls.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace wattcast {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd &A, const Eigen::VectorXd &b,
                              const std::vector<int> &passive) {
  Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(passive.size()));
  for (size_t j = 0; j < passive.size(); ++j) Ap.col(static_cast<Eigen::Index>(j)) = A.col(passive[j]);
  return Ap.colPivHouseholderQr().solve(b);
}

} // namespace

NnlsResult nnls(const Eigen::MatrixXd &A, const Eigen::VectorXd &b, double tol) {
  const Eigen::Index n = A.cols();
  if (A.rows() != b.rows()) throw std::invalid_argument("nnls: A and b row counts differ");
  if (tol < 0) tol = 1e-12 * A.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff();

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> in_passive(static_cast<size_t>(n), false);
  std::vector<int> passive;

  Eigen::VectorXd w = A.transpose() * (b - A * res.x);
  const int max_outer = 3 * static_cast<int>(n) + 30;

  for (int outer = 0; outer < max_outer; ++outer) {
    // Pick the most violated inactive gradient component.
    int best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (in_passive[static_cast<size_t>(j)]) continue;
      if (w[j] > best_w) {
        best_w = w[j];
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;
    in_passive[static_cast<size_t>(best)] = true;
    passive.push_back(best);

    // Inner loop: shrink the passive set until its LS solution is feasible.
    for (int inner = 0; inner <= max_outer; ++inner) {
      Eigen::VectorXd z = solve_passive(A, b, passive);
      double alpha = std::numeric_limits<double>::infinity();
      bool feasible = true;
      for (size_t j = 0; j < passive.size(); ++j) {
        if (z[static_cast<Eigen::Index>(j)] > 0) continue;
        feasible = false;
        const double xj = res.x[passive[j]];
        alpha = std::min(alpha, xj / (xj - z[static_cast<Eigen::Index>(j)]));
      }
      if (feasible) {
        res.x.setZero();
        for (size_t j = 0; j < passive.size(); ++j) res.x[passive[j]] = z[static_cast<Eigen::Index>(j)];
        break;
      }
      for (size_t j = 0; j < passive.size(); ++j) {
        const int col = passive[j];
        res.x[col] += alpha * (z[static_cast<Eigen::Index>(j)] - res.x[col]);
      }
      // Drop variables that hit the boundary.
      std::vector<int> kept;
      for (int col : passive) {
        if (res.x[col] > tol) {
          kept.push_back(col);
        } else {
          res.x[col] = 0.0;
          in_passive[static_cast<size_t>(col)] = false;
        }
      }
      passive = std::move(kept);
      if (passive.empty()) break;
    }
    w = A.transpose() * (b - A * res.x);
    res.iterations = outer + 1;
  }
  res.residual_norm = (b - A * res.x).norm();
  return res;
}

} // namespace wattcast
