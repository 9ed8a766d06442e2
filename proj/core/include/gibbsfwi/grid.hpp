#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gfwi {

/// Regular 2D grid, x horizontal and z depth (positive downwards), in km.
/// Values are stored x-fastest: index = iz * nx + ix.
struct Grid2D {
  int nx = 0;
  int nz = 0;
  double dx = 0.0;
  double dz = 0.0;
  double x0 = 0.0;
  double z0 = 0.0;
  /// Cells with depth below z0 + water_depth are water and held fixed.
  double water_depth = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(nz); }
  std::size_t index(int ix, int iz) const {
    return static_cast<std::size_t>(iz) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix);
  }
  double x(int ix) const { return x0 + ix * dx; }
  double z(int iz) const { return z0 + iz * dz; }
  double width() const { return (nx - 1) * dx; }
  double depth() const { return (nz - 1) * dz; }

  bool contains(double px, double pz) const;
  /// Nearest grid column/row; throws GeometryError outside the grid.
  int nearest_ix(double px) const;
  int nearest_iz(double pz) const;

  bool is_water(int iz) const { return z(iz) < z0 + water_depth - 1e-12 * dz; }
  /// 1 for inverted cells, 0 for water cells.
  std::vector<double> parameter_mask() const;

  /// Throws ConfigError unless nx, nz >= 8 and dx, dz > 0.
  void validate() const;

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// A real field sampled on a Grid2D.
struct Field2D {
  Grid2D grid;
  std::vector<double> values;

  Field2D() = default;
  explicit Field2D(const Grid2D& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  Field2D(const Grid2D& g, std::vector<double> v);

  double& operator()(int ix, int iz) { return values[grid.index(ix, iz)]; }
  double operator()(int ix, int iz) const { return values[grid.index(ix, iz)]; }
  std::span<const double> span() const { return values; }
};

}  // namespace gfwi
