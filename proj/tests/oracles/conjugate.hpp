#pragma once

// Posterior of xi ~ N(0, I) given y = A xi + N(0, s^2 I).

#include <Eigen/Dense>

namespace oracle {

struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline GaussianPosterior linear_gaussian_posterior(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double s) {
  const Eigen::Index n = a.cols();
  const Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(n, n) + a.transpose() * a / (s * s);
  GaussianPosterior p;
  p.cov = precision.inverse();
  p.mean = p.cov * (a.transpose() * y) / (s * s);
  return p;
}

}  // namespace oracle
