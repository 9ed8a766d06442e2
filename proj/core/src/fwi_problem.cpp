#include "gibbsfwi/fwi_problem.hpp"

#include <algorithm>
#include <cmath>

#include "gibbsfwi/error.hpp"

namespace gfwi {

// ------------------------------------------------ GaussianFieldParameterization

GaussianFieldParameterization::GaussianFieldParameterization(MaternField prior, SlownessMap map,
                                                             double water_velocity)
    : prior_(std::move(prior)), map_(map), water_velocity_(water_velocity) {
  if (!(water_velocity > 0.0)) throw ConfigError("water velocity must be positive");
}

std::vector<double> GaussianFieldParameterization::slowness2(std::span<const double> xi) const {
  VelocityModel m{Field2D(grid(), prior_.field(xi)), map_, water_velocity_};
  return m.slowness2();
}

std::vector<double> GaussianFieldParameterization::derivative(std::span<const double> u) const {
  const Grid2D& g = grid();
  std::vector<double> d(g.size(), 0.0);
  for (int iz = 0; iz < g.nz; ++iz) {
    if (g.is_water(iz)) continue;
    for (int ix = 0; ix < g.nx; ++ix) d[g.index(ix, iz)] = map_.derivative(u[g.index(ix, iz)]);
  }
  return d;
}

std::vector<double> GaussianFieldParameterization::pullback(std::span<const double> xi,
                                                            std::span<const double> g) const {
  const auto d = derivative(prior_.field(xi));
  if (g.size() != d.size()) throw ShapeError("pullback: gradient does not match the grid");
  std::vector<double> gu(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) gu[i] = d[i] * g[i];
  return prior_.pullback(gu);
}

std::vector<double> GaussianFieldParameterization::push_forward(std::span<const double> xi,
                                                                std::span<const double> v) const {
  const auto d = derivative(prior_.field(xi));
  auto du = prior_.window(v);
  for (std::size_t i = 0; i < d.size(); ++i) du[i] *= d[i];
  return du;
}

Field2D GaussianFieldParameterization::velocity(std::span<const double> xi) const {
  VelocityModel m{Field2D(grid(), prior_.field(xi)), map_, water_velocity_};
  return m.velocity();
}

// ------------------------------------------------ MixedLevelSetParameterization

MixedLevelSetParameterization::MixedLevelSetParameterization(MaternField level, std::vector<double> background,
                                                             HyperPrior hyper, double smoothing_width, double v_min,
                                                             double v_max, double water_velocity)
    : level_(std::move(level)),
      background_(std::move(background)),
      hyper_(hyper),
      width_(smoothing_width),
      v_min_(v_min),
      v_max_(v_max),
      water_velocity_(water_velocity) {
  if (background_.size() != level_.grid().size()) throw ShapeError("background field does not match the grid");
  if (!(hyper_.sd > 0.0)) throw ConfigError("hyper-prior sd must be positive");
  if (!(smoothing_width >= 0.0)) throw ConfigError("smoothing width must be >= 0");
  if (!(0.0 < v_min && v_min < v_max)) throw ConfigError("salt velocity range needs 0 < v_min < v_max");
}

double MixedLevelSetParameterization::salt_velocity(std::span<const double> xi) const {
  if (xi.size() != dimension()) throw ShapeError("level-set coordinates have the wrong size");
  return std::clamp(hyper_.value(xi.back()), v_min_, v_max_);
}

double MixedLevelSetParameterization::salt_slowness2_derivative(double zeta) const {
  const double s = hyper_.value(zeta);
  if (s <= v_min_ || s >= v_max_) return 0.0;
  return -2.0 * hyper_.sd / (s * s * s);
}

std::vector<double> MixedLevelSetParameterization::indicator(std::span<const double> xi) const {
  if (xi.size() != dimension()) throw ShapeError("level-set coordinates have the wrong size");
  const auto v = level_.field(xi.first(level_.latent_size()));
  const Grid2D& g = grid();
  std::vector<double> h(g.size(), 0.0);
  for (int iz = 0; iz < g.nz; ++iz) {
    if (g.is_water(iz)) continue;
    for (int ix = 0; ix < g.nx; ++ix) h[g.index(ix, iz)] = smoothed_indicator(v[g.index(ix, iz)], width_);
  }
  return h;
}

std::vector<double> MixedLevelSetParameterization::slowness2(std::span<const double> xi) const {
  const auto h = indicator(xi);
  const double s = salt_velocity(xi);
  const double ms = 1.0 / (s * s);
  const double mw = 1.0 / (water_velocity_ * water_velocity_);
  const Grid2D& g = grid();
  std::vector<double> m(g.size());
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) {
      const auto i = g.index(ix, iz);
      m[i] = g.is_water(iz) ? mw : h[i] * ms + (1.0 - h[i]) * background_[i];
    }
  return m;
}

std::vector<double> MixedLevelSetParameterization::pullback(std::span<const double> xi,
                                                            std::span<const double> gm) const {
  const Grid2D& g = grid();
  if (gm.size() != g.size()) throw ShapeError("pullback: gradient does not match the grid");
  const auto v = level_.field(xi.first(level_.latent_size()));
  const double s = salt_velocity(xi);
  const double ms = 1.0 / (s * s);
  const double dms = salt_slowness2_derivative(xi.back());
  std::vector<double> gv(g.size(), 0.0);
  double gz = 0.0;
  for (int iz = 0; iz < g.nz; ++iz) {
    if (g.is_water(iz)) continue;
    for (int ix = 0; ix < g.nx; ++ix) {
      const auto i = g.index(ix, iz);
      gv[i] = smoothed_indicator_derivative(v[i], width_) * (ms - background_[i]) * gm[i];
      gz += smoothed_indicator(v[i], width_) * dms * gm[i];
    }
  }
  auto out = level_.pullback(gv);
  out.push_back(gz);
  return out;
}

std::vector<double> MixedLevelSetParameterization::push_forward(std::span<const double> xi,
                                                                std::span<const double> dxi) const {
  const Grid2D& g = grid();
  if (dxi.size() != dimension()) throw ShapeError("push_forward: wrong perturbation size");
  const std::size_t nl = level_.latent_size();
  const auto v = level_.field(xi.first(nl));
  const auto dv = level_.window(dxi.first(nl));
  const double s = salt_velocity(xi);
  const double ms = 1.0 / (s * s);
  const double dms = salt_slowness2_derivative(xi.back()) * dxi.back();
  std::vector<double> dm(g.size(), 0.0);
  for (int iz = 0; iz < g.nz; ++iz) {
    if (g.is_water(iz)) continue;
    for (int ix = 0; ix < g.nx; ++ix) {
      const auto i = g.index(ix, iz);
      dm[i] = smoothed_indicator_derivative(v[i], width_) * (ms - background_[i]) * dv[i] +
              smoothed_indicator(v[i], width_) * dms;
    }
  }
  return dm;
}

Field2D MixedLevelSetParameterization::velocity(std::span<const double> xi) const {
  const auto m = slowness2(xi);
  Field2D v(grid());
  for (std::size_t i = 0; i < m.size(); ++i) v.values[i] = 1.0 / std::sqrt(m[i]);
  return v;
}

// ---------------------------------------------------------------- FwiProblem

FwiProblem::FwiProblem(std::shared_ptr<const WaveSolver> solver, std::shared_ptr<const Parameterization> param,
                       PotentialSpec spec, Seismogram data)
    : solver_(std::move(solver)), param_(std::move(param)), spec_(std::move(spec)), data_(std::move(data)) {
  if (!solver_ || !param_) throw ConfigError("FwiProblem needs a solver and a parameterization");
  if (!(solver_->grid() == param_->grid())) throw ShapeError("solver and parameterization grids differ");
  spec_.validate();
}

void FwiProblem::set_spec(PotentialSpec spec) {
  spec.validate();
  spec_ = std::move(spec);
}

LossEval FwiProblem::raw_loss(std::span<const double> xi, bool with_gradient) const {
  return evaluate_potential_slowness(spec_, *solver_, param_->slowness2(xi), data_, with_gradient);
}

double FwiProblem::potential(std::span<const double> xi) const {
  return spec_.scale() * raw_loss(xi, false).value;
}

double FwiProblem::potential_and_gradient(std::span<const double> xi, std::span<double> grad) const {
  const LossEval e = raw_loss(xi, true);
  const auto g = param_->pullback(xi, e.gradient->values);
  if (grad.size() != g.size()) throw ShapeError("gradient output has the wrong size");
  const double c = spec_.scale();
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] = c * g[i];
  return c * e.value;
}

LinearMap FwiProblem::linearize(std::span<const double> xi_in) const {
  struct Linearization {
    std::vector<double> xi;
    std::vector<double> m;
    ForwardHistory history;
    Seismogram predicted;
  };
  auto lin = std::make_shared<Linearization>();
  lin->xi.assign(xi_in.begin(), xi_in.end());
  lin->m = param_->slowness2(lin->xi);
  lin->predicted = solver_->forward(lin->m, &lin->history);
  remove_zero_frequency_inplace(lin->predicted);
  const double c = spec_.scale();
  return [this, lin, c](std::span<const double> v, std::span<double> out) {
    const auto dm = param_->push_forward(lin->xi, v);
    Seismogram dd = solver_->born(lin->m, dm, lin->history);
    remove_zero_frequency_inplace(dd);
    Seismogram r(dd.n_sources, dd.n_receivers, dd.nt, dd.dt);
    r.zero_mean = true;
    for (std::size_t i = 0; i < dd.trace_count(); ++i) {
      trace_gauss_newton(spec_, lin->predicted.trace(i), data_.trace(i), dd.dt, dd.trace(i), r.trace(i));
      remove_zero_frequency_inplace(r.trace(i));
    }
    const auto g = solver_->adjoint(lin->m, r, lin->history);
    const auto gx = param_->pullback(lin->xi, g);
    for (std::size_t i = 0; i < gx.size(); ++i) out[i] = c * gx[i];
  };
}

}  // namespace gfwi
