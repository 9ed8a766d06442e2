#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "gibbsfwi/grid.hpp"

namespace gfwi {

using Rng = std::mt19937_64;

/// Draws n iid standard normals.
std::vector<double> standard_normal(std::size_t n, Rng& rng);

struct MaternSpec {
  double sigma = 0.7;
  double nu = 3.0;
  /// Length-scale in km.
  double ell = 0.05;
  /// Constant mean, used when mean_field is empty.
  double mean_value = 0.0;
  std::vector<double> mean_field;

  double mean_at(std::size_t i) const { return mean_field.empty() ? mean_value : mean_field[i]; }
  void validate(const Grid2D& grid) const;
};

/// Gaussian field with Matern covariance, sampled spectrally from the
/// symbol of (I - ell^2 Laplacian)^{-nu/2 - 1/2} on a periodic grid that
/// extends the model grid by at least max(n, 4 ell / h) cells per axis.
///
/// Whitened coordinates xi are iid N(0, 1) on the padded grid; the field on
/// the model grid is mean + R S xi where S is the symmetric circulant square
/// root of the covariance and R restricts to the model window.
class MaternField {
 public:
  MaternField(const Grid2D& grid, MaternSpec spec);

  const Grid2D& grid() const { return grid_; }
  const MaternSpec& spec() const { return spec_; }
  int padded_nx() const { return px_; }
  int padded_nz() const { return pz_; }
  std::size_t latent_size() const { return static_cast<std::size_t>(px_) * pz_; }

  /// Padded zero-mean field S xi.
  std::vector<double> unwhiten(std::span<const double> xi) const;
  /// Inverse of unwhiten on padded fields.
  std::vector<double> whiten(std::span<const double> padded) const;
  /// Field on the model grid: mean + R S xi.
  std::vector<double> field(std::span<const double> xi) const;
  /// Zero-mean window part R S xi.
  std::vector<double> window(std::span<const double> xi) const;
  /// S^T R^T g: maps a model-grid gradient to whitened coordinates.
  std::vector<double> pullback(std::span<const double> g) const;

  std::vector<double> sample_latent(Rng& rng) const { return standard_normal(latent_size(), rng); }
  std::vector<double> sample(Rng& rng) const { return field(sample_latent(rng)); }

  /// Covariance between two cells separated by (lag_x, lag_z) cells.
  double covariance(int lag_x, int lag_z) const;
  double pointwise_variance() const { return covariance(0, 0); }
  /// Dense covariance of the model-grid field.
  Eigen::MatrixXd window_covariance() const;

 private:
  std::vector<double> apply_symbol(std::span<const double> in, bool inverse) const;

  Grid2D grid_;
  MaternSpec spec_;
  int px_ = 0;
  int pz_ = 0;
  std::vector<double> root_;  // sqrt of the spectral weights, r2c layout
  std::vector<double> cov_;   // periodic covariance, padded layout
};

/// One draw of the Matern field on `grid`.
std::vector<double> sample_matern(const MaternSpec& spec, const Grid2D& grid, Rng& rng);

struct HyperPrior {
  double mean = 3.0;
  double sd = 4.0;
  double value(double zeta) const { return mean + sd * zeta; }
  double coordinate(double value) const { return (value - mean) / sd; }
};

struct LevelSetSpec {
  enum class Mode { plain, mixed };

  MaternSpec underlying;
  Mode mode = Mode::plain;
  double u_plus = 1.0;
  std::optional<HyperPrior> hyper;
  double u_minus = 0.0;
  std::optional<MaternSpec> background;
  double smoothing_width = 0.0;

  void validate() const;
};

/// Indicator of v > 0, or 1/2 (1 + tanh(v / width)) when width > 0.
double smoothed_indicator(double v, double width);
double smoothed_indicator_derivative(double v, double width);

/// plain: u_plus H(v) + u_minus (1 - H(v)); mixed: salt H(v) + w (1 - H(v)).
std::vector<double> apply_levelset(const LevelSetSpec& spec, std::span<const double> v,
                                   std::span<const double> w, double salt_value);

}  // namespace gfwi
