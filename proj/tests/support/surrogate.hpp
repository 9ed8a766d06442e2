#pragma once

#include <memory>
#include <vector>

#include "gibbsfwi/inference.hpp"
#include "gibbsfwi/priors.hpp"

namespace testing_support {

/// Linear-Gaussian surrogate posterior: noisy point values of a Matern
/// field at fixed physical locations.  The same physical problem at any
/// grid resolution.
struct PointObservations {
  std::shared_ptr<gfwi::MaternField> field;
  std::vector<std::size_t> cells;
  std::unique_ptr<gfwi::LinearGaussianProblem> problem;
};

inline PointObservations point_observations(int n, double extent, const gfwi::MaternSpec& spec,
                                            const std::vector<std::pair<double, double>>& points,
                                            const std::vector<double>& values, double noise_sd) {
  gfwi::Grid2D g;
  g.nx = g.nz = n;
  g.dx = g.dz = extent / (n - 1);
  PointObservations out;
  out.field = std::make_shared<gfwi::MaternField>(g, spec);
  for (const auto& [x, z] : points) out.cells.push_back(g.index(g.nearest_ix(x), g.nearest_iz(z)));
  auto field = out.field;
  auto cells = out.cells;
  auto fwd = [field, cells](std::span<const double> xi, std::span<double> y) {
    const auto u = field->window(xi);
    for (std::size_t k = 0; k < cells.size(); ++k) y[k] = u[cells[k]];
  };
  auto adj = [field, cells](std::span<const double> r, std::span<double> out) {
    std::vector<double> g(field->grid().size(), 0.0);
    for (std::size_t k = 0; k < cells.size(); ++k) g[cells[k]] += r[k];
    const auto x = field->pullback(g);
    std::copy(x.begin(), x.end(), out.begin());
  };
  out.problem = std::make_unique<gfwi::LinearGaussianProblem>(out.field->latent_size(), values, noise_sd, fwd, adj);
  return out;
}

}  // namespace testing_support
