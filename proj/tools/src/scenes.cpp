#include "gfwi_cli/scenes.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace gfwi::cli {

namespace {

double bump(double x, double z, double cx, double cz, double r) {
  const double dx = x - cx, dz = z - cz;
  return std::exp(-(dx * dx + dz * dz) / (r * r));
}

// Salt outline in fractions of (width, depth).
constexpr std::array<std::array<double, 2>, 8> kSaltOutline = {{{0.33, 0.50},
                                                                {0.45, 0.36},
                                                                {0.58, 0.33},
                                                                {0.70, 0.42},
                                                                {0.74, 0.62},
                                                                {0.63, 0.78},
                                                                {0.46, 0.80},
                                                                {0.34, 0.68}}};

bool inside_outline(double fx, double fz) {
  bool in = false;
  for (std::size_t i = 0, j = kSaltOutline.size() - 1; i < kSaltOutline.size(); j = i++) {
    const auto& a = kSaltOutline[i];
    const auto& b = kSaltOutline[j];
    if ((a[1] > fz) != (b[1] > fz) && fx < (b[0] - a[0]) * (fz - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
  }
  return in;
}

template <class F>
Field2D fill(const Grid2D& g, double water_velocity, F&& f) {
  Field2D v(g);
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix)
      v(ix, iz) = g.is_water(iz) ? water_velocity
                                 : f((g.x(ix) - g.x0) / std::max(g.width(), 1e-300),
                                     (g.z(iz) - g.z0) / std::max(g.depth(), 1e-300));
  return v;
}

}  // namespace

Field2D continuous_scene(const Grid2D& grid, double water_velocity) {
  return fill(grid, water_velocity, [](double fx, double fz) {
    const double interface = 0.72 + 0.06 * std::sin(2.0 * std::numbers::pi * fx);
    double v = 2.0 + 1.5 * fz + 0.4 * (0.5 * (1.0 + std::tanh((fz - interface) / 0.03)));
    v += 0.7 * bump(fx, fz, 0.32, 0.5, 0.12);
    v -= 0.4 * bump(fx, fz, 0.7, 0.38, 0.09);
    return v;
  });
}

Field2D salt_background(const Grid2D& grid, double water_velocity) {
  return fill(grid, water_velocity, [](double, double fz) { return 1.9 + 1.6 * fz; });
}

Field2D salt_scene(const Grid2D& grid, double water_velocity) {
  return fill(grid, water_velocity,
              [](double fx, double fz) { return inside_outline(fx, fz) ? kSaltVelocity : 1.9 + 1.6 * fz; });
}

std::vector<double> salt_mask(const Grid2D& g) {
  std::vector<double> m(g.size(), 0.0);
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix)
      if (!g.is_water(iz) && inside_outline(ix / double(g.nx - 1), iz / double(g.nz - 1))) m[g.index(ix, iz)] = 1.0;
  return m;
}

std::vector<double> gaussian_smooth(const Grid2D& g, std::span<const double> values, double width) {
  std::vector<double> out(values.begin(), values.end());
  if (width <= 0.0) return out;
  auto pass = [&](int n, double h, auto index) {
    const int r = static_cast<int>(std::ceil(3.0 * width / h));
    std::vector<double> w(2 * r + 1);
    for (int k = -r; k <= r; ++k) w[k + r] = std::exp(-0.5 * (k * h / width) * (k * h / width));
    std::vector<double> tmp(out.size());
    const int lines = static_cast<int>(out.size()) / n;
    for (int l = 0; l < lines; ++l)
      for (int i = 0; i < n; ++i) {
        double s = 0.0, ws = 0.0;
        for (int k = std::max(-r, -i); k <= std::min(r, n - 1 - i); ++k) {
          s += w[k + r] * out[index(l, i + k)];
          ws += w[k + r];
        }
        tmp[index(l, i)] = s / ws;
      }
    out.swap(tmp);
  };
  pass(g.nx, g.dx, [&](int line, int i) { return g.index(i, line); });
  pass(g.nz, g.dz, [&](int line, int i) { return g.index(line, i); });
  return out;
}

}  // namespace gfwi::cli
