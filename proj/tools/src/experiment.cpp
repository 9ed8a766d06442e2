#include "gfwi_cli/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "gfwi_cli/scenes.hpp"
#include "gibbsfwi/error.hpp"
#include "gibbsfwi/io.hpp"

namespace gfwi::cli {

Scene build_scene(const ExperimentConfig& c) {
  Scene s;
  s.grid = c.grid.grid();
  s.grid.validate();
  if (!c.model.file.empty()) {
    s.velocity = io::read_field(c.model.file);
    if (s.velocity.grid.nx != s.grid.nx || s.velocity.grid.nz != s.grid.nz)
      throw ConfigError("config: field 'model.file': velocity grid does not match grid.nx/grid.nz");
    s.velocity.grid = s.grid;
    s.background = s.velocity;
  } else if (c.model.scene == "salt") {
    s.velocity = salt_scene(s.grid, c.model.water_velocity);
    s.background = salt_background(s.grid, c.model.water_velocity);
  } else {
    s.velocity = continuous_scene(s.grid, c.model.water_velocity);
    s.background = s.velocity;
  }
  const auto& gc = c.geometry;
  s.options.sponge_cells = gc.sponge_cells;
  s.options.absorbing_top = gc.absorbing_top;
  s.options.history_stride = gc.history_stride;
  s.options.threads = c.threads;
  double vmax = c.model.v_max;
  for (double v : s.velocity.values) vmax = std::max(vmax, v);
  const double dt_limit = max_stable_dt(s.grid, vmax) / gc.time_refinement;
  s.geometry.nt = static_cast<int>(std::ceil(gc.t_max / dt_limit));
  s.geometry.dt = gc.t_max / s.geometry.nt;
  s.geometry.wavelets = {Wavelet::ricker(gc.peak_frequency)};
  const double w = s.grid.width();
  for (int i = 0; i < gc.n_sources; ++i)
    s.geometry.sources.push_back({{s.grid.x0 + w * (i + 0.5) / gc.n_sources, s.grid.z0 + gc.source_depth}, 0});
  for (int i = 0; i < gc.n_receivers; ++i)
    s.geometry.receivers.push_back({s.grid.x0 + w * (i + 0.5) / gc.n_receivers, s.grid.z0 + gc.receiver_depth});
  s.geometry.validate(s.grid);
  return s;
}

std::shared_ptr<WaveSolver> make_solver(const Scene& scene, const ExperimentConfig& c) {
  double vmax = c.model.v_max;
  for (double v : scene.velocity.values) vmax = std::max(vmax, v);
  return std::make_shared<WaveSolver>(scene.grid, scene.geometry, scene.options, vmax);
}

std::vector<double> slowness2_of(const Field2D& velocity) {
  std::vector<double> m(velocity.values.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 1.0 / (velocity.values[i] * velocity.values[i]);
  return m;
}

Dataset simulate(const WaveSolver& solver, const Scene& scene, const NoiseConfig& noise, std::uint64_t seed) {
  Dataset d;
  d.clean = remove_zero_frequency(solver.forward(slowness2_of(scene.velocity)));
  if (noise.enabled) {
    Rng rng(seed);
    d.noisy = noise.snr_db ? make_noise_snr(d.clean, rng, *noise.snr_db) : make_noise(d.clean, rng, noise.amplitude);
    // Zero amplitude leaves the clean traces bit-identical.
    if (d.noisy->amplitude > 0.0) remove_zero_frequency_inplace(d.noisy->data);
  }
  return d;
}

std::shared_ptr<GaussianFieldParameterization> gaussian_parameterization(const Scene& scene,
                                                                         const ExperimentConfig& c) {
  const SlownessMap map(c.model.v_min, c.model.v_max);
  const Grid2D& g = scene.grid;
  // Latent of the truth; velocities at the bounds are pulled just inside.
  const double lo = c.model.v_min + 1e-3 * (c.model.v_max - c.model.v_min);
  const double hi = c.model.v_max - 1e-3 * (c.model.v_max - c.model.v_min);
  std::vector<double> u(g.size(), 0.0);
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) {
      const auto i = g.index(ix, iz);
      const double v = g.is_water(iz) ? 0.5 * (lo + hi) : std::clamp(scene.velocity.values[i], lo, hi);
      u[i] = map.latent_from_velocity(v);
    }
  MaternSpec spec;
  spec.sigma = c.prior.sigma;
  spec.nu = c.prior.nu;
  spec.ell = c.prior.ell;
  spec.mean_field = gaussian_smooth(g, u, c.prior.mean_smoothing);
  return std::make_shared<GaussianFieldParameterization>(MaternField(g, std::move(spec)), map,
                                                         c.model.water_velocity);
}

std::shared_ptr<MixedLevelSetParameterization> levelset_parameterization(const Scene& scene,
                                                                         const ExperimentConfig& c) {
  MaternSpec spec;
  spec.sigma = c.prior.level_sigma;
  spec.nu = c.prior.level_nu;
  spec.ell = c.prior.level_ell;
  spec.mean_value = c.prior.level_offset;
  return std::make_shared<MixedLevelSetParameterization>(
      MaternField(scene.grid, std::move(spec)), slowness2_of(scene.background),
      HyperPrior{c.prior.salt_mean, c.prior.salt_sd}, c.prior.smoothing_width, c.model.v_min, c.model.v_max,
      c.model.water_velocity);
}

std::shared_ptr<const Parameterization> make_parameterization(const Scene& scene, const ExperimentConfig& c) {
  if (c.prior.kind == "levelset") return levelset_parameterization(scene, c);
  return gaussian_parameterization(scene, c);
}

PotentialSpec normalized_spec(const PotentialConfig& pc, const WaveSolver& solver, const Parameterization& param,
                              const Seismogram& y_ref) {
  PotentialSpec spec;
  spec.kind = pc.kind;
  spec.beta = pc.beta;
  if (pc.kind == PotentialKind::W2 || pc.kind == PotentialKind::M) spec.normalizer = default_normalizer(y_ref);
  const std::vector<double> xi0(param.dimension(), 0.0);
  const double raw = evaluate_potential_slowness(spec, solver, param.slowness2(xi0), y_ref, false).value;
  if (!(raw > 0.0) || !std::isfinite(raw)) throw NumericError("potential vanishes at the prior mean; cannot normalise");
  spec.norm_constant = raw;
  return spec;
}

Inversion invert(const FwiProblem& problem, const ExperimentConfig& c, std::vector<double> init) {
  if (init.empty()) init.assign(problem.dimension(), 0.0);
  Inversion inv;
  inv.spec = problem.spec();
  inv.map = map_estimate(problem, std::move(init), c.map);
  inv.laplace = laplace(problem, inv.map.xi, c.laplace);
  return inv;
}

double laplace_distance(const GaussianApprox& a, const GaussianApprox& b, const Parameterization& param,
                        const std::string& space) {
  if (space == "latent") return gaussian_w2(a, b);
  const auto* gp = dynamic_cast<const GaussianFieldParameterization*>(&param);
  if (!gp) throw ConfigError("config: field 'compare.space': 'grid' needs a Gaussian prior");
  return gaussian_w2(pushforward_to_grid(a, gp->prior()), pushforward_to_grid(b, gp->prior()));
}

StabilityRun run_stability(const ExperimentConfig& c, std::uint64_t noise_seed) {
  const Scene scene = build_scene(c);
  const auto solver = make_solver(scene, c);
  NoiseConfig noise = c.noise;
  noise.enabled = true;
  const Dataset data = simulate(*solver, scene, noise, noise_seed);
  const auto param = make_parameterization(scene, c);
  StabilityRun run;
  for (const auto& pc : c.potentials) {
    // Normalisation and normaliser come from the clean data for both runs.
    const PotentialSpec spec = normalized_spec(pc, *solver, *param, data.clean);
    const FwiProblem clean(solver, param, spec, data.clean);
    const FwiProblem noisy(solver, param, spec, data.noisy->data);
    run.kinds.push_back(pc.kind);
    run.clean.push_back(invert(clean, c));
    run.noisy.push_back(invert(noisy, c, run.clean.back().map.xi));
  }
  run.report = stability_report({}, data.clean, data.noisy->data, scene.grid, data.noisy->snr_db, noise_seed);
  for (std::size_t k = 0; k < run.kinds.size(); ++k) {
    StabilityEntry e;
    e.kind = run.kinds[k];
    e.distance_w2 = laplace_distance(run.clean[k].laplace, run.noisy[k].laplace, *param, c.compare.space);
    e.reference = reference_distance(e.kind);
    run.report.entries.push_back(e);
  }
  return run;
}

}  // namespace gfwi::cli
