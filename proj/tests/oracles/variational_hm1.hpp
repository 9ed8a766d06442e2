#pragma once

// ||h||^2_{H^-1(f)} = sup_phi 2 int h f phi - int f phi'^2 for piecewise
// constant h, f on cells of width dt.  The maximiser is piecewise quadratic,
// so P2 finite elements on the cells give the supremum exactly.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace oracle {

inline double weighted_hm1_squared(const std::vector<double>& h, const std::vector<double>& f, double dt) {
  const std::size_t n = h.size();
  // dofs: vertices 0..n, midpoints n+1..2n
  const std::size_t dofs = 2 * n + 1;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dofs, dofs);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dofs);
  const double ke[3][3] = {{7, 1, -8}, {1, 7, -8}, {-8, -8, 16}};
  const double be[3] = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t idx[3] = {c, c + 1, n + 1 + c};
    for (int i = 0; i < 3; ++i) {
      b[idx[i]] += h[c] * f[c] * dt * be[i];
      for (int j = 0; j < 3; ++j) k(idx[i], idx[j]) += f[c] / (3.0 * dt) * ke[i][j];
    }
  }
  // phi is defined up to a constant: pin vertex 0.
  const Eigen::MatrixXd kr = k.bottomRightCorner(dofs - 1, dofs - 1);
  const Eigen::VectorXd br = b.tail(dofs - 1);
  const Eigen::VectorXd phi = kr.ldlt().solve(br);
  return br.dot(phi);
}

}  // namespace oracle
