#pragma once

// Pressure trace of a point source in a homogeneous 2D acoustic medium,
// m v_tt - Laplacian v = delta(x) w(t), with c = 1 / sqrt(m):
//   v(r, t) = (c^2 / 2 pi c) int_{r/c}^{t} w(t - s) / sqrt(c^2 s^2 - r^2) ds.
// With s = (r / c) cosh(theta) the integrand is smooth:
//   v(r, t) = (1 / 2 pi) int_0^{acosh(c t / r)} w(t - (r / c) cosh theta) d theta.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline double green2d_trace(const std::function<double(double)>& w, double c, double r, double t,
                            int nodes = 4000) {
  if (c * t <= r) return 0.0;
  const double top = std::acosh(c * t / r);
  const double h = top / nodes;
  double sum = 0.0;
  for (int k = 0; k <= nodes; ++k) {
    const double wt = (k == 0 || k == nodes) ? 0.5 : 1.0;
    sum += wt * w(t - (r / c) * std::cosh(k * h));
  }
  return sum * h / (2.0 * std::numbers::pi);
}

}  // namespace oracle
