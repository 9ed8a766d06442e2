#pragma once

#include <memory>
#include <span>
#include <vector>

#include "gibbsfwi/grid_wave.hpp"
#include "gibbsfwi/inference.hpp"
#include "gibbsfwi/potentials.hpp"
#include "gibbsfwi/priors.hpp"

namespace gfwi {

/// Map from whitened coordinates xi to squared slowness on the model grid.
class Parameterization {
 public:
  virtual ~Parameterization() = default;
  virtual std::size_t dimension() const = 0;
  virtual const Grid2D& grid() const = 0;
  virtual std::vector<double> slowness2(std::span<const double> xi) const = 0;
  /// (dm/dxi)^T g.
  virtual std::vector<double> pullback(std::span<const double> xi, std::span<const double> g) const = 0;
  /// (dm/dxi) v.
  virtual std::vector<double> push_forward(std::span<const double> xi, std::span<const double> v) const = 0;
};

/// u = Matern field(xi), m = F(u) below the water, water velocity above.
class GaussianFieldParameterization : public Parameterization {
 public:
  GaussianFieldParameterization(MaternField prior, SlownessMap map, double water_velocity = 1.5);

  std::size_t dimension() const override { return prior_.latent_size(); }
  const Grid2D& grid() const override { return prior_.grid(); }
  std::vector<double> slowness2(std::span<const double> xi) const override;
  std::vector<double> pullback(std::span<const double> xi, std::span<const double> g) const override;
  std::vector<double> push_forward(std::span<const double> xi, std::span<const double> v) const override;

  const MaternField& prior() const { return prior_; }
  const SlownessMap& map() const { return map_; }
  std::vector<double> latent_field(std::span<const double> xi) const { return prior_.field(xi); }
  Field2D velocity(std::span<const double> xi) const;

 private:
  std::vector<double> derivative(std::span<const double> u) const;

  MaternField prior_;
  SlownessMap map_;
  double water_velocity_;
};

/// Mixed level set with a hierarchical salt velocity: xi = (level-set
/// coordinates, zeta), salt velocity s = mean + sd * zeta clamped to
/// [v_min, v_max], and m = H(v) / s^2 + (1 - H(v)) m_background.
class MixedLevelSetParameterization : public Parameterization {
 public:
  MixedLevelSetParameterization(MaternField level, std::vector<double> background_slowness2, HyperPrior hyper,
                                double smoothing_width, double v_min, double v_max, double water_velocity = 1.5);

  std::size_t dimension() const override { return level_.latent_size() + 1; }
  const Grid2D& grid() const override { return level_.grid(); }
  std::vector<double> slowness2(std::span<const double> xi) const override;
  std::vector<double> pullback(std::span<const double> xi, std::span<const double> g) const override;
  std::vector<double> push_forward(std::span<const double> xi, std::span<const double> v) const override;

  const MaternField& level() const { return level_; }
  const HyperPrior& hyper() const { return hyper_; }
  double smoothing_width() const { return width_; }
  double salt_velocity(std::span<const double> xi) const;
  /// H(v) on the model grid (0 on water cells).
  std::vector<double> indicator(std::span<const double> xi) const;
  Field2D velocity(std::span<const double> xi) const;

 private:
  double salt_slowness2_derivative(double zeta) const;

  MaternField level_;
  std::vector<double> background_;
  HyperPrior hyper_;
  double width_;
  double v_min_, v_max_;
  double water_velocity_;
};

/// Tempered FWI posterior: Phi(xi) = beta / norm_constant * raw(m(xi); y).
class FwiProblem : public PosteriorProblem {
 public:
  FwiProblem(std::shared_ptr<const WaveSolver> solver, std::shared_ptr<const Parameterization> param,
             PotentialSpec spec, Seismogram data);

  std::size_t dimension() const override { return param_->dimension(); }
  double potential(std::span<const double> xi) const override;
  double potential_and_gradient(std::span<const double> xi, std::span<double> grad) const override;
  LinearMap linearize(std::span<const double> xi) const override;

  LossEval raw_loss(std::span<const double> xi, bool with_gradient = false) const;
  const PotentialSpec& spec() const { return spec_; }
  void set_spec(PotentialSpec spec);
  const Seismogram& data() const { return data_; }
  const Parameterization& parameterization() const { return *param_; }
  const WaveSolver& solver() const { return *solver_; }

 private:
  std::shared_ptr<const WaveSolver> solver_;
  std::shared_ptr<const Parameterization> param_;
  PotentialSpec spec_;
  Seismogram data_;
};

}  // namespace gfwi
