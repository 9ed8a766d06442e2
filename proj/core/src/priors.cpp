#include "gibbsfwi/priors.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "dct.hpp"
#include "gibbsfwi/error.hpp"

namespace gfwi {

std::vector<double> standard_normal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) x = normal(rng);
  return out;
}

void MaternSpec::validate(const Grid2D& grid) const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("Matern sigma must be non-negative");
  if (!(nu > 0.0)) throw ConfigError("Matern nu must be positive");
  if (!(ell > 0.0)) throw ConfigError("Matern length-scale must be positive");
  if (!mean_field.empty() && mean_field.size() != grid.size())
    throw ShapeError("Matern mean field does not match the grid");
}

namespace {

int padded_size(int n, double ell, double h) {
  const int extra = static_cast<int>(std::ceil(4.0 * ell / h));
  return std::max(2 * n, n + extra);
}

double wavenumber(int k, int p, double h) {
  const int kk = k <= p / 2 ? k : k - p;
  return 2.0 * std::numbers::pi * kk / (p * h);
}

}  // namespace

MaternField::MaternField(const Grid2D& grid, MaternSpec spec) : grid_(grid), spec_(std::move(spec)) {
  grid_.validate();
  spec_.validate(grid_);
  px_ = padded_size(grid_.nx, spec_.ell, grid_.dx);
  pz_ = padded_size(grid_.nz, spec_.ell, grid_.dz);
  const int hx = px_ / 2 + 1;
  root_.assign(static_cast<std::size_t>(pz_) * hx, 0.0);
  const double l2 = spec_.ell * spec_.ell;
  const double amp = spec_.sigma * spec_.sigma * 4.0 * std::numbers::pi * spec_.nu * l2;
  std::vector<std::complex<double>> power(root_.size());
  for (int kz = 0; kz < pz_; ++kz) {
    const double wz = wavenumber(kz, pz_, grid_.dz);
    for (int kx = 0; kx < hx; ++kx) {
      const double wx = wavenumber(kx, px_, grid_.dx);
      const double lambda = amp * std::pow(1.0 + l2 * (wx * wx + wz * wz), -(spec_.nu + 1.0));
      const double s2 = lambda / (grid_.dx * grid_.dz);
      root_[static_cast<std::size_t>(kz) * hx + kx] = std::sqrt(s2);
      power[static_cast<std::size_t>(kz) * hx + kx] = s2;
    }
  }
  cov_.resize(latent_size());
  detail::irfft2(pz_, px_, power, cov_);
  const double inv_n = 1.0 / static_cast<double>(latent_size());
  for (double& c : cov_) c *= inv_n;
}

std::vector<double> MaternField::apply_symbol(std::span<const double> in, bool inverse) const {
  if (in.size() != latent_size()) throw ShapeError("latent vector has the wrong size");
  const int hx = px_ / 2 + 1;
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(pz_) * hx);
  detail::rfft2(pz_, px_, in, spec);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (inverse) {
      if (!(root_[i] > 0.0)) throw DomainError("whiten: covariance symbol is not invertible");
      spec[i] /= root_[i];
    } else {
      spec[i] *= root_[i];
    }
  }
  std::vector<double> out(latent_size());
  detail::irfft2(pz_, px_, spec, out);
  const double inv_n = 1.0 / static_cast<double>(latent_size());
  for (double& x : out) x *= inv_n;
  return out;
}

std::vector<double> MaternField::unwhiten(std::span<const double> xi) const { return apply_symbol(xi, false); }

std::vector<double> MaternField::whiten(std::span<const double> padded) const { return apply_symbol(padded, true); }

std::vector<double> MaternField::window(std::span<const double> xi) const {
  const auto full = unwhiten(xi);
  std::vector<double> out(grid_.size());
  for (int iz = 0; iz < grid_.nz; ++iz)
    for (int ix = 0; ix < grid_.nx; ++ix)
      out[grid_.index(ix, iz)] = full[static_cast<std::size_t>(iz) * px_ + ix];
  return out;
}

std::vector<double> MaternField::field(std::span<const double> xi) const {
  auto out = window(xi);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += spec_.mean_at(i);
  return out;
}

std::vector<double> MaternField::pullback(std::span<const double> g) const {
  if (g.size() != grid_.size()) throw ShapeError("pullback: gradient does not match the grid");
  std::vector<double> full(latent_size(), 0.0);
  for (int iz = 0; iz < grid_.nz; ++iz)
    for (int ix = 0; ix < grid_.nx; ++ix)
      full[static_cast<std::size_t>(iz) * px_ + ix] = g[grid_.index(ix, iz)];
  return apply_symbol(full, false);
}

double MaternField::covariance(int lag_x, int lag_z) const {
  const int ix = ((lag_x % px_) + px_) % px_;
  const int iz = ((lag_z % pz_) + pz_) % pz_;
  return cov_[static_cast<std::size_t>(iz) * px_ + ix];
}

Eigen::MatrixXd MaternField::window_covariance() const {
  const std::size_t n = grid_.size();
  Eigen::MatrixXd c(n, n);
  for (int az = 0; az < grid_.nz; ++az)
    for (int ax = 0; ax < grid_.nx; ++ax) {
      const auto a = grid_.index(ax, az);
      for (int bz = 0; bz < grid_.nz; ++bz)
        for (int bx = 0; bx < grid_.nx; ++bx) c(a, grid_.index(bx, bz)) = covariance(ax - bx, az - bz);
    }
  return c;
}

std::vector<double> sample_matern(const MaternSpec& spec, const Grid2D& grid, Rng& rng) {
  return MaternField(grid, spec).sample(rng);
}

// ---------------------------------------------------------------- level set

void LevelSetSpec::validate() const {
  if (!(smoothing_width >= 0.0)) throw ConfigError("level-set smoothing width must be >= 0");
  if (hyper && !(hyper->sd > 0.0)) throw ConfigError("hyper-prior sd must be positive");
  if (mode == Mode::mixed && !background) throw ConfigError("mixed level set needs a background field spec");
}

double smoothed_indicator(double v, double width) {
  if (width <= 0.0) return v > 0.0 ? 1.0 : 0.0;
  return 0.5 * (1.0 + std::tanh(v / width));
}

double smoothed_indicator_derivative(double v, double width) {
  if (width <= 0.0) return 0.0;
  const double c = std::cosh(v / width);
  return 0.5 / (width * c * c);
}

std::vector<double> apply_levelset(const LevelSetSpec& spec, std::span<const double> v, std::span<const double> w,
                                   double salt_value) {
  if (spec.smoothing_width < 0.0) throw ConfigError("level-set smoothing width must be >= 0");
  const bool mixed = spec.mode == LevelSetSpec::Mode::mixed;
  if (mixed && w.empty()) throw ConfigError("mixed level set needs a background field w");
  if (mixed && w.size() != v.size()) throw ShapeError("level-set fields differ in size");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double h = smoothed_indicator(v[i], spec.smoothing_width);
    if (h == 1.0) {
      out[i] = mixed ? salt_value : spec.u_plus;
    } else if (h == 0.0) {
      out[i] = mixed ? w[i] : spec.u_minus;
    } else {
      out[i] = mixed ? h * salt_value + (1.0 - h) * w[i] : h * spec.u_plus + (1.0 - h) * spec.u_minus;
    }
  }
  return out;
}

}  // namespace gfwi
