#include "gibbsfwi/grid.hpp"

#include <cmath>
#include <string>

#include "gibbsfwi/error.hpp"

namespace gfwi {

bool Grid2D::contains(double px, double pz) const {
  const double tol_x = 1e-9 * dx;
  const double tol_z = 1e-9 * dz;
  return px >= x0 - tol_x && px <= x0 + width() + tol_x && pz >= z0 - tol_z &&
         pz <= z0 + depth() + tol_z;
}

int Grid2D::nearest_ix(double px) const {
  const long i = std::lround((px - x0) / dx);
  if (i < 0 || i >= nx) throw GeometryError("x = " + std::to_string(px) + " km lies outside the grid");
  return static_cast<int>(i);
}

int Grid2D::nearest_iz(double pz) const {
  const long i = std::lround((pz - z0) / dz);
  if (i < 0 || i >= nz) throw GeometryError("z = " + std::to_string(pz) + " km lies outside the grid");
  return static_cast<int>(i);
}

std::vector<double> Grid2D::parameter_mask() const {
  std::vector<double> mask(size(), 1.0);
  for (int iz = 0; iz < nz; ++iz) {
    if (!is_water(iz)) continue;
    for (int ix = 0; ix < nx; ++ix) mask[index(ix, iz)] = 0.0;
  }
  return mask;
}

void Grid2D::validate() const {
  if (nx < 8 || nz < 8) throw ConfigError("grid needs at least 8 cells per axis");
  if (!(dx > 0.0) || !(dz > 0.0)) throw ConfigError("grid spacing must be positive");
  if (!(water_depth >= 0.0)) throw ConfigError("water_depth must be non-negative");
}

Field2D::Field2D(const Grid2D& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw ShapeError("field size does not match grid");
}

}  // namespace gfwi
