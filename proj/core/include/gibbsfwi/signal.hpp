#pragma once

#include <span>
#include <utility>
#include <vector>

namespace gfwi {

/// Uniformly sampled trace on T = (0, n * dt].  Samples are cell values:
/// sample j stands for the interval [j dt, (j + 1) dt).
struct Trace {
  std::vector<double> samples;
  double dt = 0.0;

  double t_span() const { return static_cast<double>(samples.size()) * dt; }
};

/// Positive probability density on T with a bounds certificate
/// lower <= samples <= upper.
struct DensityTrace {
  std::vector<double> samples;
  double dt = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  /// Set when some samples were raised to the floor value.
  bool floored = false;

  double t_span() const { return static_cast<double>(samples.size()) * dt; }
  double mass() const;
  /// Throws PreconditionError unless mass is 1 within 1e-10 and samples > 0.
  void validate() const;
};

/// Normalises positive values to unit mass; bounds are the sample range.
DensityTrace make_density(std::vector<double> values, double dt);

/// Positive function sigma used to turn traces into densities.
struct NormalizerSpec {
  enum class Kind { square_plus_delta, exponential, softplus };

  Kind kind = Kind::square_plus_delta;
  /// sigma(z) = z^2 + delta.
  double delta = 0.1;
  /// exp(b z) or log(1 + exp(b z)) / b.
  double scale = 1.0;

  static NormalizerSpec square_plus_delta(double delta);
  static NormalizerSpec exponential(double scale);
  static NormalizerSpec softplus(double scale);

  double operator()(double z) const;
  double derivative(double z) const;
  /// Min and max of sigma over [lo, hi].
  std::pair<double, double> range(double lo, double hi) const;
  /// Lipschitz constant of sigma over [-r, r].
  double lipschitz(double r) const;
  void validate() const;
};

/// Smallest density value kept by p_sigma before renormalisation.
inline constexpr double kDensityFloor = 1e-12;

/// P_sigma y = sigma(y) / Z with Z = sum sigma(y_j) dt.  `z_out` receives Z.
DensityTrace p_sigma(std::span<const double> y, double dt, const NormalizerSpec& spec, double* z_out = nullptr);
DensityTrace p_sigma(const Trace& y, const NormalizerSpec& spec);

/// How a sampled density is read as a measure on T.
enum class MassModel {
  /// Piecewise-constant density on cells (continuous CDF).
  cells,
  /// Point mass samples[j] * dt at the cell centre.
  atoms,
};

/// Squared quadratic Wasserstein distance between two densities sampled on
/// the same axis, computed exactly by merging quantile breakpoints.
double w2_squared(std::span<const double> f, std::span<const double> g, double dt,
                  MassModel model = MassModel::cells);
double w2_1d(const DensityTrace& f, const DensityTrace& g, MassModel model = MassModel::cells);

/// W2^2(f, g) and its gradient with respect to the cell values of f
/// (cells model, g fixed).
double w2_squared_gradient(std::span<const double> f, std::span<const double> g, double dt,
                           std::span<double> grad);

/// Unweighted H^-1 seminorm of a zero-mean trace (Neumann cosine basis).
/// Throws PreconditionError when |mean| > 1e-8 max|h|.
double hminus1_norm(std::span<const double> h, double dt);
double hminus1_norm(const Trace& h);
/// Squared seminorm of the mean-free part, no precondition check.
double hminus1_squared(std::span<const double> h, double dt);
/// out = K h where <h, K h> = hminus1_squared(h); K is symmetric PSD.
void hminus1_gram(std::span<const double> h, double dt, std::span<double> out);

/// Weighted seminorm ||h||_{H^-1(f)}; requires sum h f dt = 0.
double weighted_hminus1_norm(std::span<const double> h, std::span<const double> f, double dt);
double weighted_hminus1_norm(const Trace& h, const DensityTrace& f);
/// Q(p) = ||p / f||^2_{H^-1(f)} for a zero-mass density perturbation p,
/// without precondition checks.
double weighted_hminus1_squared_flux(std::span<const double> p, std::span<const double> f, double dt);
/// out = gradient of Q(p) / 2, i.e. the symmetric operator of Q applied to p.
void weighted_hminus1_flux_gram(std::span<const double> p, std::span<const double> f, double dt,
                                std::span<double> out);

struct LinearizationTable {
  std::vector<double> eps;
  std::vector<double> ratio;  // W2(f, (1 + eps h) f)^2 / eps^2
  double target = 0.0;        // ||h||^2_{H^-1(f)}
};

LinearizationTable check_linearization(const DensityTrace& f, const Trace& h, const std::vector<double>& eps);

struct EquivalenceBounds {
  double lower = 0.0;
  double w2 = 0.0;
  double upper = 0.0;
  bool holds(double slack = 1e-10) const { return w2 >= lower - slack && w2 <= upper + slack; }
};

/// (b^-1/2 ||f-g||_{H^-1}, W2(f, g), a^-1/2 ||f-g||_{H^-1}) with a, b the
/// shared lower/upper certificates of f and g.
EquivalenceBounds check_equivalence_bounds(const DensityTrace& f, const DensityTrace& g);

/// Constant C with ||P y - P y'||_L2 <= C ||y - y'||_L2 for |y|, |y'| <= r
/// on an interval of length t_span.
double psigma_lipschitz(const NormalizerSpec& spec, double r, double t_span);

}  // namespace gfwi
