#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "gfwi_cli/config.hpp"
#include "gibbsfwi/fwi_problem.hpp"
#include "gibbsfwi/posterior_metrics.hpp"

namespace gfwi::cli {

struct Scene {
  Grid2D grid;
  AcquisitionGeometry geometry;
  SolverOptions options;
  /// True velocity.
  Field2D velocity;
  /// Velocity without the salt body (salt scene only; otherwise a copy of
  /// velocity).
  Field2D background;
};

Scene build_scene(const ExperimentConfig& config);
std::shared_ptr<WaveSolver> make_solver(const Scene& scene, const ExperimentConfig& config);
std::vector<double> slowness2_of(const Field2D& velocity);

struct Dataset {
  Seismogram clean;
  std::optional<NoisyData> noisy;
};

/// Zero-frequency-removed traces for the true model plus, when enabled,
/// noisy traces drawn from Rng(seed).
Dataset simulate(const WaveSolver& solver, const Scene& scene, const NoiseConfig& noise, std::uint64_t seed);

/// Gaussian prior on u with mean = smoothed F^-1(true slowness).
std::shared_ptr<GaussianFieldParameterization> gaussian_parameterization(const Scene& scene,
                                                                         const ExperimentConfig& config);
/// Mixed level set over the true (salt-free) background.
std::shared_ptr<MixedLevelSetParameterization> levelset_parameterization(const Scene& scene,
                                                                         const ExperimentConfig& config);
std::shared_ptr<const Parameterization> make_parameterization(const Scene& scene, const ExperimentConfig& config);

/// Potential normalised so that Phi(prior mean; y_ref) = beta.  W2 and M use
/// the default normaliser of y_ref.
PotentialSpec normalized_spec(const PotentialConfig& pc, const WaveSolver& solver, const Parameterization& param,
                              const Seismogram& y_ref);

struct Inversion {
  PotentialSpec spec;
  MapResult map;
  GaussianApprox laplace;
};

/// MAP from `init` (the prior mean when empty) and the Laplace
/// approximation there.
Inversion invert(const FwiProblem& problem, const ExperimentConfig& config, std::vector<double> init = {});

/// W2 between two Laplace approximations in the configured space.
double laplace_distance(const GaussianApprox& a, const GaussianApprox& b, const Parameterization& param,
                        const std::string& space);

/// Clean and noisy inversions for every configured potential followed by
/// the stability report.  Noise follows config.noise with seed noise_seed.
/// The noisy MAP search starts at the clean MAP point.
struct StabilityRun {
  StabilityReport report;
  std::vector<PotentialKind> kinds;
  std::vector<Inversion> clean;
  std::vector<Inversion> noisy;
};
StabilityRun run_stability(const ExperimentConfig& config, std::uint64_t noise_seed);

}  // namespace gfwi::cli
