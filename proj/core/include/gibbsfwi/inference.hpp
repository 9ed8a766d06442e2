#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gibbsfwi/priors.hpp"

namespace gfwi {

/// Symmetric operator v -> H v on whitened coordinates.
using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

/// Posterior with density exp(-Phi(xi)) N(0, I)(d xi) on whitened
/// coordinates.  Phi is the effective (tempered, normalised) potential.
class PosteriorProblem {
 public:
  virtual ~PosteriorProblem() = default;
  virtual std::size_t dimension() const = 0;
  virtual double potential(std::span<const double> xi) const = 0;
  /// Returns Phi(xi) and writes dPhi/dxi.
  virtual double potential_and_gradient(std::span<const double> xi, std::span<double> grad) const = 0;
  /// Gauss-Newton approximation of the Hessian of Phi at xi.
  virtual LinearMap linearize(std::span<const double> xi) const = 0;
};

/// Phi(xi) = |A xi - y|^2 / (2 noise_sd^2), A given as an operator pair.
class LinearGaussianProblem : public PosteriorProblem {
 public:
  using Operator = std::function<void(std::span<const double>, std::span<double>)>;

  LinearGaussianProblem(std::size_t dim, std::vector<double> data, double noise_sd, Operator forward,
                        Operator adjoint);
  static LinearGaussianProblem dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double noise_sd);

  std::size_t dimension() const override { return dim_; }
  double potential(std::span<const double> xi) const override;
  double potential_and_gradient(std::span<const double> xi, std::span<double> grad) const override;
  LinearMap linearize(std::span<const double> xi) const override;

 private:
  std::size_t dim_;
  std::vector<double> data_;
  double precision_;
  Operator forward_;
  Operator adjoint_;
};

/// Phi = 0: the posterior is the prior.
class ZeroPotential : public PosteriorProblem {
 public:
  explicit ZeroPotential(std::size_t dim) : dim_(dim) {}
  std::size_t dimension() const override { return dim_; }
  double potential(std::span<const double>) const override { return 0.0; }
  double potential_and_gradient(std::span<const double>, std::span<double> grad) const override;
  LinearMap linearize(std::span<const double>) const override;

 private:
  std::size_t dim_;
};

// ---------------------------------------------------------------- MAP

struct MapOptions {
  int max_iterations = 200;
  /// Stop when |grad J| <= gradient_tolerance * |grad J(init)|.
  double gradient_tolerance = 1e-6;
  /// Stop when the relative objective decrease of an iteration is below this.
  double objective_tolerance = 1e-12;
  int memory = 10;
  int max_backtracks = 40;
  double armijo = 1e-4;
};

struct MapResult {
  std::vector<double> xi;
  double objective = 0.0;
  double potential = 0.0;
  double gradient_norm = 0.0;
  double initial_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after every accepted iteration (starting point first).
  std::vector<double> history;
};

/// Minimises J(xi) = Phi(xi) + |xi|^2 / 2 with L-BFGS and Armijo
/// backtracking.  Throws OptimizationError when no descent step is found.
MapResult map_estimate(const PosteriorProblem& problem, std::vector<double> init, const MapOptions& options = {});

// ------------------------------------------------------------ Laplace

struct LaplaceOptions {
  int max_rank = 50;
  /// Keep eigenvalues >= relative_cutoff * largest.
  double relative_cutoff = 1e-2;
  int oversampling = 10;
  /// Dimensions up to this use a dense eigen-decomposition.
  std::size_t exact_dimension = 256;
  std::uint64_t seed = 1;
};

/// N(mean, (I + V diag(lambda) V^T)^-1) on whitened coordinates.
struct GaussianApprox {
  std::vector<double> mean;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  std::size_t dimension() const { return mean.size(); }
  int rank() const { return static_cast<int>(eigenvalues.size()); }
  /// d_i = lambda_i / (1 + lambda_i): covariance = I - V diag(d) V^T.
  Eigen::VectorXd shrinkage() const;
  void apply_covariance(std::span<const double> v, std::span<double> out) const;
  /// Applies the symmetric square root of the covariance.
  void apply_sqrt_covariance(std::span<const double> v, std::span<double> out) const;
  Eigen::MatrixXd dense_covariance() const;
  std::vector<double> variance() const;
  std::vector<double> sample(Rng& rng) const;
};

/// Top eigenpairs of the Gauss-Newton Hessian at xi_map.  Throws
/// LinearAlgebraError if an eigenvalue <= -1 is found.
GaussianApprox laplace(const PosteriorProblem& problem, std::span<const double> xi_map,
                       const LaplaceOptions& options = {});

// ---------------------------------------------------------------- pCN

struct ChainState {
  std::vector<double> xi;
  double potential = 0.0;
  double step = 0.2;
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;
  /// Last proposal had a non-finite potential and was rejected.
  bool rejected_nonfinite = false;
  Rng rng;
};

ChainState make_chain_state(const PosteriorProblem& problem, std::vector<double> xi, double step,
                            std::uint64_t seed);

/// One preconditioned Crank-Nicolson step.
void pcn_step(ChainState& state, const PosteriorProblem& problem);

struct ChainOptions {
  std::uint64_t steps = 1000;
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 10;
  double step = 0.2;
  bool adapt = true;
  double target_acceptance = 0.25;
  std::uint64_t adapt_interval = 50;
  std::uint64_t seed = 1;
};

struct ChainSummary {
  std::vector<double> mean;
  std::vector<double> variance;
  /// accepted / total over the post-burn-in steps.
  double acceptance_rate = 0.0;
  std::uint64_t accepted = 0;
  std::uint64_t total = 0;
  double final_step = 0.0;
  std::uint64_t nonfinite_rejections = 0;
  /// Thinned post-burn-in states, one row per kept sample.
  std::vector<std::vector<double>> samples;
  std::vector<double> potentials;
  /// The run had no post-burn-in steps; only the initial state is reported.
  bool initial_only = false;
};

/// Runs pCN from init.  Deterministic for a fixed seed.  Step-size
/// adaptation happens only during burn-in.
ChainSummary run_chain(const PosteriorProblem& problem, std::vector<double> init, const ChainOptions& options);

}  // namespace gfwi
