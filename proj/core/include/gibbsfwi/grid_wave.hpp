#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gibbsfwi/grid.hpp"

namespace gfwi {

/// Map from the latent field u to squared slowness m = F(u) =
/// a_minus * tanh(u) + a_plus, with a_plus/a_minus chosen so that the
/// velocity 1/sqrt(m) stays strictly inside (v_min, v_max).
class SlownessMap {
 public:
  SlownessMap() = default;
  SlownessMap(double v_min, double v_max);

  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }
  double alpha_plus() const { return alpha_plus_; }
  double alpha_minus() const { return alpha_minus_; }

  double slowness2(double u) const;
  double derivative(double u) const;
  /// Inverse map; m must lie strictly inside (v_max^-2, v_min^-2).
  double latent(double m) const;
  double velocity(double u) const;
  double latent_from_velocity(double v) const;

 private:
  double v_min_ = 1.5;
  double v_max_ = 4.5;
  double alpha_plus_ = 0.0;
  double alpha_minus_ = 0.0;
};

/// Latent field plus the transformation to squared slowness.  Water cells
/// (above grid.water_depth) use water_velocity instead of F(u).
struct VelocityModel {
  Field2D u;
  SlownessMap map;
  double water_velocity = 1.5;

  std::vector<double> slowness2() const;
  Field2D velocity() const;
  void validate() const;
};

/// Source time function.  Ricker wavelets are evaluated analytically;
/// sampled wavelets give the value at t_n = n * dt directly.
struct Wavelet {
  enum class Kind { ricker, samples };

  Kind kind = Kind::ricker;
  double peak_frequency = 5.0;
  double delay = 0.24;
  double amplitude = 1.0;
  /// The wavelet is identically zero for t > cutoff.
  double cutoff = std::numeric_limits<double>::infinity();
  std::vector<double> samples;

  static Wavelet ricker(double peak_frequency, double delay = -1.0, double amplitude = 1.0);
  static Wavelet from_samples(std::vector<double> values);

  double value(int step, double dt) const;
};

struct Point2 {
  double x = 0.0;
  double z = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct SourceSpec {
  Point2 position;
  int wavelet = 0;
};

/// Sources, receivers and the time axis T = (0, nt * dt].
struct AcquisitionGeometry {
  std::vector<SourceSpec> sources;
  std::vector<Point2> receivers;
  std::vector<Wavelet> wavelets;
  double dt = 0.0;
  int nt = 0;

  double t_max() const { return nt * dt; }
  int n_sources() const { return static_cast<int>(sources.size()); }
  int n_receivers() const { return static_cast<int>(receivers.size()); }
  /// Throws GeometryError for points outside the grid and ConfigError for
  /// an empty acquisition or a bad time axis.
  void validate(const Grid2D& grid) const;
};

/// Receiver traces, laid out [source][receiver][time].  Sample k holds the
/// wavefield at t = (k + 1) * dt.
struct Seismogram {
  int n_sources = 0;
  int n_receivers = 0;
  int nt = 0;
  double dt = 0.0;
  bool zero_mean = false;
  std::vector<double> data;

  Seismogram() = default;
  Seismogram(int sources, int receivers, int steps, double step);

  std::size_t trace_count() const {
    return static_cast<std::size_t>(n_sources) * static_cast<std::size_t>(n_receivers);
  }
  double t_span() const { return nt * dt; }
  std::span<double> trace(std::size_t flat);
  std::span<const double> trace(std::size_t flat) const;
  std::span<double> trace(int source, int receiver) { return trace(flat_index(source, receiver)); }
  std::span<const double> trace(int source, int receiver) const { return trace(flat_index(source, receiver)); }
  std::size_t flat_index(int source, int receiver) const {
    return static_cast<std::size_t>(source) * static_cast<std::size_t>(n_receivers) +
           static_cast<std::size_t>(receiver);
  }
  /// Contiguous block of all traces of one source.
  std::span<double> source_block(int source);
  std::span<const double> source_block(int source) const;

  bool same_shape(const Seismogram& other) const;
  bool all_finite() const;
  double max_abs() const;
};

/// Subtracts the time mean of every trace and sets zero_mean.
Seismogram remove_zero_frequency(const Seismogram& s);
void remove_zero_frequency_inplace(Seismogram& s);
void remove_zero_frequency_inplace(std::span<double> trace);

struct SolverOptions {
  /// Width of the damping layers added outside the model grid.
  int sponge_cells = 20;
  /// Target amplitude reflection of the sponge.
  double sponge_reflection = 1e-3;
  /// Free surface (Dirichlet) on top unless true.
  bool absorbing_top = false;
  /// Keep every k-th forward state; others are linearly interpolated.
  int history_stride = 1;
  int threads = 1;
};

/// Largest time step accepted for the leapfrog / 4th-order stencil pair:
/// 0.9 of the exact stability limit for velocity v_max.
double max_stable_dt(const Grid2D& grid, double v_max);

/// Model grid extended by sponge layers, with a two-cell zero halo that
/// implements the Dirichlet boundary of the stencil.
class PaddedDomain {
 public:
  static constexpr int halo = 2;

  PaddedDomain() = default;
  PaddedDomain(const Grid2D& grid, const SolverOptions& options, double v_max);

  const Grid2D& grid() const { return grid_; }
  int nx() const { return nx_; }
  int nz() const { return nz_; }
  int pad_left() const { return pad_left_; }
  int pad_top() const { return pad_top_; }
  /// Length of a halo-layout array.
  std::size_t storage_size() const { return static_cast<std::size_t>(stride_) * (nz_ + 2 * halo); }
  std::size_t interior_size() const { return static_cast<std::size_t>(nx_) * nz_; }
  /// Halo-layout index of a padded cell.
  std::size_t at(int px, int pz) const {
    return static_cast<std::size_t>(pz + halo) * stride_ + static_cast<std::size_t>(px + halo);
  }
  /// Halo-layout index of a physical grid cell.
  std::size_t at_physical(int ix, int iz) const { return at(ix + pad_left_, iz + pad_top_); }

  /// Physical field -> halo-layout padded field (edge replication, zero halo).
  std::vector<double> extend(std::span<const double> physical) const;
  /// Adjoint of extend: adds padded contributions onto their source cells.
  void fold(std::span<const double> padded, std::span<double> physical) const;
  /// Damping coefficient per padded cell (halo layout, zero in the halo).
  const std::vector<double>& damping() const { return damping_; }

  /// out = L in on the padded interior (halo layout).  L is symmetric.
  void laplacian(const double* in, double* out) const;
  /// Compact interior copy of a halo-layout array.
  std::vector<double> interior(std::span<const double> halo_array) const;
  /// Inverse of interior: compact array -> halo layout with zero halo.
  std::vector<double> embed(std::span<const double> compact) const;

 private:
  Grid2D grid_;
  int nx_ = 0;
  int nz_ = 0;
  int pad_left_ = 0;
  int pad_top_ = 0;
  int stride_ = 0;
  std::vector<double> damping_;
};

/// Forward wavefield states v^0 .. v^nt per source, kept every `stride`
/// steps (halo layout).
struct ForwardHistory {
  int stride = 1;
  int nt = 0;
  std::vector<std::vector<std::vector<double>>> states;

  /// v^n for source s, linearly interpolated between stored states.
  void state(int source, int n, std::span<double> out) const;
};

/// Acoustic solver for m v_tt + m gamma v_t - Laplacian v = s with leapfrog
/// time stepping.  The adjoint and Born routines are the exact transposes /
/// derivatives of the discrete forward recursion.
class WaveSolver {
 public:
  /// Called with the trace block of one source; must fill `residual` with
  /// dJ/d(trace samples) for that source.
  using ResidualFn = std::function<void(int source, std::span<const double> predicted,
                                        std::span<double> residual)>;
  using StepObserver = std::function<void(int step, std::span<const double> state)>;

  WaveSolver(const Grid2D& grid, AcquisitionGeometry geometry, SolverOptions options, double v_max);

  const Grid2D& grid() const { return domain_.grid(); }
  const AcquisitionGeometry& geometry() const { return geometry_; }
  const SolverOptions& options() const { return options_; }
  const PaddedDomain& domain() const { return domain_; }

  /// Receiver traces for squared slowness m on the model grid.
  Seismogram forward(std::span<const double> m, ForwardHistory* history = nullptr) const;

  /// dJ/dm on the model grid for residual traces dJ/dd, using a stored
  /// forward history.
  std::vector<double> adjoint(std::span<const double> m, const Seismogram& residual,
                              const ForwardHistory& history) const;

  /// Linearised traces dd = (dG/dm) dm around the stored forward state.
  Seismogram born(std::span<const double> m, std::span<const double> dm,
                  const ForwardHistory& history) const;

  /// Forward then adjoint, one source at a time, so only one history is
  /// alive per worker.  Returns dJ/dm; optionally stores the prediction.
  std::vector<double> forward_adjoint(std::span<const double> m, const ResidualFn& residual,
                                      Seismogram* predicted = nullptr) const;

  /// Runs a single source and reports v^{n+1} (compact interior layout)
  /// after every step n.
  void simulate(std::span<const double> m, int source, const StepObserver& observer) const;

 private:
  struct Injection {
    std::size_t cell;
    int wavelet;
  };

  void check_model(std::span<const double> m) const;
  std::vector<double> inverse_slowness(std::span<const double> m) const;
  double source_term(int source, int step) const;
  void forward_one(const std::vector<double>& q, int source, std::span<double> traces,
                   std::vector<std::vector<double>>* states, const StepObserver* observer) const;
  void adjoint_one(const std::vector<double>& q, int source, std::span<const double> residual,
                   const ForwardHistory& history, int history_source, std::vector<double>& grad_q) const;
  void born_one(const std::vector<double>& q, const std::vector<double>& dq, int source,
                const ForwardHistory& history, std::span<double> traces) const;

  PaddedDomain domain_;
  AcquisitionGeometry geometry_;
  SolverOptions options_;
  double v_max_;
  std::vector<Injection> sources_;
  std::vector<std::size_t> receivers_;
};

/// Convenience wrappers on a VelocityModel.
Seismogram solve_forward(const VelocityModel& model, const AcquisitionGeometry& geometry,
                         const SolverOptions& options = {});
/// dJ/dm for residual traces, using a forward history of the same model.
Field2D solve_adjoint(const VelocityModel& model, const AcquisitionGeometry& geometry,
                      const Seismogram& residual, const ForwardHistory& history,
                      const SolverOptions& options = {});

}  // namespace gfwi
