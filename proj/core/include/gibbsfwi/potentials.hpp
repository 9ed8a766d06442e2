#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbsfwi/grid.hpp"
#include "gibbsfwi/grid_wave.hpp"
#include "gibbsfwi/signal.hpp"

namespace gfwi {

enum class PotentialKind { L2, Hm1, M, W2 };

std::string to_string(PotentialKind kind);
/// Accepts "L2", "Hm1", "M", "W2" (case-insensitive); throws ConfigError.
PotentialKind parse_potential_kind(const std::string& name);

struct PotentialSpec {
  PotentialKind kind = PotentialKind::L2;
  /// Inverse temperature.
  double beta = 1.0;
  /// Required for M and W2, absent otherwise.
  std::optional<NormalizerSpec> normalizer;
  /// Raw loss at the calibration point; the effective potential is
  /// beta * raw / norm_constant.
  double norm_constant = 1.0;
  /// M only: divide by P_sigma G(u) instead of P_sigma y.
  bool m_model_denominator = false;

  double scale() const { return beta / norm_constant; }
  void validate() const;
};

/// sigma(z) = z^2 + 0.1 max|y|^2, fixed for a whole dataset.
NormalizerSpec default_normalizer(const Seismogram& y);

struct LossEval {
  /// Raw loss 1/2 sum_traces per_trace (unit receiver weights).
  double value = 0.0;
  /// Squared trace distance per (source, receiver).
  std::vector<double> per_trace;
  /// d value / du, water cells zeroed.
  std::optional<Field2D> gradient;
};

/// Squared distance between one predicted and one observed trace; when
/// `adjoint` is non-empty it receives d(distance^2 / 2)/d(pred).
double trace_misfit(const PotentialSpec& spec, std::span<const double> pred, std::span<const double> obs,
                    double dt, std::span<double> adjoint = {});

/// Gauss-Newton Hessian of distance^2 / 2 with respect to pred, applied to v.
void trace_gauss_newton(const PotentialSpec& spec, std::span<const double> pred, std::span<const double> obs,
                        double dt, std::span<const double> v, std::span<double> out);

/// Raw loss of a full seismogram pair; `adjoint` (if given) receives the
/// trace-wise derivative, already projected onto zero-mean traces.
LossEval seismogram_misfit(const PotentialSpec& spec, const Seismogram& pred, const Seismogram& obs,
                           Seismogram* adjoint = nullptr);

/// The forward map G: u -> zero-mean receiver traces.
class ForwardModel {
 public:
  ForwardModel(const Grid2D& grid, AcquisitionGeometry geometry, SolverOptions options, SlownessMap map,
               double water_velocity = 1.5);

  const Grid2D& grid() const { return solver_.grid(); }
  const AcquisitionGeometry& geometry() const { return solver_.geometry(); }
  const WaveSolver& solver() const { return solver_; }
  const SlownessMap& map() const { return map_; }
  double water_velocity() const { return water_velocity_; }

  std::vector<double> slowness2(std::span<const double> u) const;
  /// dm/du per cell, zero on water cells.
  std::vector<double> slowness2_derivative(std::span<const double> u) const;
  VelocityModel model(std::span<const double> u) const;
  Seismogram predict(std::span<const double> u) const;

 private:
  SlownessMap map_;
  double water_velocity_;
  WaveSolver solver_;
};

/// Raw loss for squared slowness m on the model grid; the gradient is
/// d value / dm with no mask applied.
LossEval evaluate_potential_slowness(const PotentialSpec& spec, const WaveSolver& solver, std::span<const double> m,
                                     const Seismogram& y, bool with_gradient = true);

LossEval evaluate_potential(const PotentialSpec& spec, const ForwardModel& forward, std::span<const double> u,
                            const Seismogram& y, bool with_gradient = true);

LossEval eval_l2(const ForwardModel& forward, std::span<const double> u, const Seismogram& y,
                 bool with_gradient = true);
LossEval eval_hm1(const ForwardModel& forward, std::span<const double> u, const Seismogram& y,
                  bool with_gradient = true);
LossEval eval_m(const ForwardModel& forward, std::span<const double> u, const Seismogram& y,
                const NormalizerSpec& normalizer, bool with_gradient = true);
LossEval eval_w2(const ForwardModel& forward, std::span<const double> u, const Seismogram& y,
                 const NormalizerSpec& normalizer, bool with_gradient = true);

/// Sets norm_constant = raw loss at u0.  Throws NumericError if it is zero.
PotentialSpec calibrate(PotentialSpec spec, const ForwardModel& forward, std::span<const double> u0,
                        const Seismogram& y);

struct PotentialBounds {
  /// Upper bound on the raw loss.
  double m0 = 0.0;
  /// Lipschitz constant in the data, in the L2 norm (L2, M) or the H^-1
  /// norm (Hm1, W2) of the seismogram.
  double m2 = 0.0;
};

/// Explicit bounds for traces with |pred|, |y|, |y'| <= r.
PotentialBounds potential_bounds(const PotentialSpec& spec, std::size_t n_traces, int nt, double dt, double r);

/// Norm of a seismogram: sqrt(sum_traces ||trace||^2) in L2 or H^-1.
double seismogram_l2_norm(const Seismogram& s);
double seismogram_hm1_norm(const Seismogram& s);

/// c with ||h||_L2 <= c ||h||_{H^-1} for zero-mean traces of n samples.
double hminus1_inverse_constant(int n, double dt);

}  // namespace gfwi
