#pragma once

// Central finite differences with a step sweep.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

struct DirectionalCheck {
  double analytic = 0.0;
  double best_fd = 0.0;
  double best_step = 0.0;
  double relative_error = std::numeric_limits<double>::infinity();
};

/// Compares `analytic` with (J(x + h d) - J(x - h d)) / 2h over the given
/// steps and keeps the closest.
inline DirectionalCheck directional_fd(const std::function<double(const std::vector<double>&)>& j,
                                       const std::vector<double>& x, const std::vector<double>& d, double analytic,
                                       const std::vector<double>& steps) {
  DirectionalCheck out;
  out.analytic = analytic;
  std::vector<double> xp(x.size()), xm(x.size());
  for (double h : steps) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + h * d[i];
      xm[i] = x[i] - h * d[i];
    }
    const double fd = (j(xp) - j(xm)) / (2.0 * h);
    const double err = std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-300);
    if (err < out.relative_error) {
      out.relative_error = err;
      out.best_fd = fd;
      out.best_step = h;
    }
  }
  return out;
}

}  // namespace oracle
