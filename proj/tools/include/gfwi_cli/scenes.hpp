#pragma once

#include <span>
#include <vector>

#include "gibbsfwi/grid.hpp"

namespace gfwi::cli {

inline constexpr double kSaltVelocity = 4.79;

/// Velocity gradient with a fast and a slow smooth inclusion and an
/// undulating deeper interface.  Water cells hold water_velocity.
Field2D continuous_scene(const Grid2D& grid, double water_velocity = 1.5);

/// Linear velocity gradient without the salt.
Field2D salt_background(const Grid2D& grid, double water_velocity = 1.5);
/// Polygonal salt body at kSaltVelocity over salt_background.
Field2D salt_scene(const Grid2D& grid, double water_velocity = 1.5);
/// 1 inside the salt polygon, 0 outside.
std::vector<double> salt_mask(const Grid2D& grid);

/// Separable Gaussian filter with standard deviation `width` km,
/// normalised at the edges.
std::vector<double> gaussian_smooth(const Grid2D& grid, std::span<const double> values, double width);

}  // namespace gfwi::cli
