#pragma once

#include <cmath>
#include <vector>

#include "gibbsfwi/grid_wave.hpp"
#include "gibbsfwi/priors.hpp"

namespace testing_support {

struct Scene {
  gfwi::Grid2D grid;
  gfwi::AcquisitionGeometry geometry;
  gfwi::SolverOptions options;
  double v_min = 1.5;
  double v_max = 4.5;
};

/// Surface acquisition on an nx x nz grid with spacing h km.
inline Scene small_scene(int nx, int nz, int n_sources, int n_receivers, double h = 0.05, double t_max = 1.0,
                         double peak_frequency = 5.0) {
  Scene s;
  s.grid.nx = nx;
  s.grid.nz = nz;
  s.grid.dx = h;
  s.grid.dz = h;
  s.options.sponge_cells = 12;
  const double dt = 0.9 * gfwi::max_stable_dt(s.grid, s.v_max);
  s.geometry.nt = static_cast<int>(std::ceil(t_max / dt));
  s.geometry.dt = t_max / s.geometry.nt;
  s.geometry.wavelets = {gfwi::Wavelet::ricker(peak_frequency)};
  const double depth = 2 * h;
  for (int i = 0; i < n_sources; ++i)
    s.geometry.sources.push_back({{s.grid.width() * (i + 0.5) / n_sources, depth}, 0});
  for (int i = 0; i < n_receivers; ++i)
    s.geometry.receivers.push_back({s.grid.width() * (i + 0.5) / n_receivers, depth});
  return s;
}

/// Smooth latent test field: background plus a Gaussian bump.
inline std::vector<double> bump_field(const gfwi::Grid2D& g, double base, double amp) {
  std::vector<double> u(g.size());
  const double cx = 0.5 * g.width(), cz = 0.6 * g.depth(), w = 0.2 * g.width();
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double dx = g.x(ix) - cx, dz = g.z(iz) - cz;
      u[g.index(ix, iz)] = base + amp * std::exp(-(dx * dx + dz * dz) / (w * w));
    }
  return u;
}

inline std::vector<double> random_vector(std::size_t n, gfwi::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace testing_support
