#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbsfwi/grid_wave.hpp"
#include "gibbsfwi/inference.hpp"
#include "gibbsfwi/potentials.hpp"
#include "gibbsfwi/priors.hpp"

namespace gfwi {

/// Gaussian with an explicit dense covariance.
struct DenseGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
};

/// Largest dimension accepted by the dense routines.
inline constexpr std::size_t kDenseMetricLimit = 4096;

/// Squared W2 between Gaussians, general formula
/// |m1 - m2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).
/// Throws LinearAlgebraError on non-symmetric or indefinite covariances.
double gaussian_w2_squared_general(const DenseGaussian& a, const DenseGaussian& b);
/// Squared W2 for commuting covariances: |m1 - m2|^2 + |S1^1/2 - S2^1/2|_F^2.
double gaussian_w2_squared_commuting(const DenseGaussian& a, const DenseGaussian& b);
/// |S1 S2 - S2 S1|_F <= tol |S1|_F |S2|_F.
bool covariances_commute(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol = 1e-12);

/// W2 distance; uses the commuting formula when the covariances commute.
double gaussian_w2(const DenseGaussian& a, const DenseGaussian& b);
double gaussian_hellinger_squared(const DenseGaussian& a, const DenseGaussian& b);
/// Hellinger distance d_H in [0, 1].
double gaussian_hellinger(const DenseGaussian& a, const DenseGaussian& b);

/// Low-rank pairs N(m, I - V D V^T) sharing the whitened prior N(0, I).
/// Both are restricted to span(V1, V2, m1 - m2); the complement contributes
/// nothing.  Falls back to the dense routines when the reduced basis fails
/// its orthogonality check and the dimension allows it.
double gaussian_w2(const GaussianApprox& a, const GaussianApprox& b);
double gaussian_hellinger_squared(const GaussianApprox& a, const GaussianApprox& b);
double gaussian_hellinger(const GaussianApprox& a, const GaussianApprox& b);

DenseGaussian to_dense(const GaussianApprox& g);
/// Law of the model-grid field u = mean + R S xi for xi ~ g.
DenseGaussian pushforward_to_grid(const GaussianApprox& g, const MaternField& prior);

// ------------------------------------------------- Hellinger by sampling

struct HellingerEstimate {
  /// Estimate of d_H^2, clipped to [0, 1].
  double value = 0.0;
  /// Bootstrap standard error of value.
  double standard_error = 0.0;
  /// Smaller of the two effective sample sizes.
  double effective_sample_size = 0.0;
  /// Set when the effective sample size is below 10.
  bool unreliable = false;
};

using PotentialFn = std::function<double(std::span<const double>)>;
using PriorDraw = std::function<std::vector<double>(Rng&)>;

/// Self-normalised estimate of d_H^2 between exp(-phi) pi0 and
/// exp(-phi2) pi0 using n prior draws.  Draws are taken sequentially from
/// rng; potentials are evaluated on `threads` workers.
HellingerEstimate hellinger_is(const PotentialFn& phi, const PotentialFn& phi2, const PriorDraw& prior_draw,
                               std::size_t n_samples, Rng& rng, int bootstrap = 200, int threads = 1);

// ---------------------------------------------------------------- noise

struct NoisyData {
  Seismogram data;
  /// eta_0(t), one value per time sample.
  std::vector<double> eta0;
  double amplitude = 0.0;
  /// 10 log10(|y|^2 / |eta|^2); +inf for zero noise.
  double snr_db = 0.0;
};

/// y + (1 + y / |y|_inf) eta_0(t), eta_0 iid N(0, amplitude^2) and shared
/// by every trace.  Draws nt normals from rng.
NoisyData make_noise(const Seismogram& y, Rng& rng, double amplitude);
/// As make_noise, with the amplitude chosen so the SNR equals target_db.
/// Consumes the same draws as make_noise.
NoisyData make_noise_snr(const Seismogram& y, Rng& rng, double target_db);
/// 10 log10(|y|^2 / |noisy - y|^2).
double snr_db(const Seismogram& y, const Seismogram& noisy);

// ------------------------------------------------------ stability report

struct StabilityInput {
  PotentialKind kind = PotentialKind::L2;
  std::optional<DenseGaussian> clean;
  std::optional<DenseGaussian> noisy;
};

struct StabilityEntry {
  PotentialKind kind = PotentialKind::L2;
  /// Absent when either approximation is missing.
  std::optional<double> distance_w2;
  std::optional<double> reference;
};

struct StabilityReport {
  std::vector<StabilityEntry> entries;
  double norm_l2 = 0.0;
  double norm_hm1 = 0.0;
  double snr_db = 0.0;
  Grid2D grid;
  std::uint64_t seed = 0;

  const StabilityEntry* find(PotentialKind kind) const;
  /// d(L2) > d(W2) > d(Hm1); empty when one of them is missing.
  std::optional<bool> ordering_holds() const;
  std::string to_json() const;
  std::string to_csv() const;
};

/// Published reference distance for a potential, if any.
std::optional<double> reference_distance(PotentialKind kind);

StabilityReport stability_report(const std::vector<StabilityInput>& runs, const Seismogram& y,
                                 const Seismogram& y_noisy, const Grid2D& grid, double snr_db,
                                 std::uint64_t seed);

}  // namespace gfwi
