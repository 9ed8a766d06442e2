#include "gibbsfwi/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dct.hpp"
#include "gibbsfwi/error.hpp"

namespace gfwi {

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite sample");
}

double softplus_fn(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ------------------------------------------------------------- DensityTrace

double DensityTrace::mass() const { return std::accumulate(samples.begin(), samples.end(), 0.0) * dt; }

void DensityTrace::validate() const {
  if (samples.empty() || !(dt > 0.0)) throw PreconditionError("density needs samples and dt > 0");
  for (double x : samples)
    if (!(x > 0.0) || !std::isfinite(x)) throw PreconditionError("density samples must be positive");
  if (std::abs(mass() - 1.0) > 1e-10) throw PreconditionError("density does not integrate to 1");
}

DensityTrace make_density(std::vector<double> values, double dt) {
  if (values.empty() || !(dt > 0.0)) throw ShapeError("density needs samples and dt > 0");
  const double total = std::accumulate(values.begin(), values.end(), 0.0) * dt;
  if (!(total > 0.0)) throw DomainError("density has non-positive mass");
  for (double& x : values) x /= total;
  DensityTrace d;
  d.samples = std::move(values);
  d.dt = dt;
  const auto [lo, hi] = std::minmax_element(d.samples.begin(), d.samples.end());
  d.lower = *lo;
  d.upper = *hi;
  return d;
}

// ----------------------------------------------------------- NormalizerSpec

NormalizerSpec NormalizerSpec::square_plus_delta(double delta) {
  NormalizerSpec s;
  s.kind = Kind::square_plus_delta;
  s.delta = delta;
  s.validate();
  return s;
}

NormalizerSpec NormalizerSpec::exponential(double scale) {
  NormalizerSpec s;
  s.kind = Kind::exponential;
  s.scale = scale;
  s.validate();
  return s;
}

NormalizerSpec NormalizerSpec::softplus(double scale) {
  NormalizerSpec s;
  s.kind = Kind::softplus;
  s.scale = scale;
  s.validate();
  return s;
}

void NormalizerSpec::validate() const {
  if (kind == Kind::square_plus_delta && !(delta > 0.0)) throw ConfigError("normalizer delta must be > 0");
  if (kind != Kind::square_plus_delta && !(scale > 0.0)) throw ConfigError("normalizer scale must be > 0");
}

double NormalizerSpec::operator()(double z) const {
  switch (kind) {
    case Kind::square_plus_delta:
      return z * z + delta;
    case Kind::exponential:
      return std::exp(scale * z);
    case Kind::softplus:
      return softplus_fn(scale * z) / scale;
  }
  return 0.0;
}

double NormalizerSpec::derivative(double z) const {
  switch (kind) {
    case Kind::square_plus_delta:
      return 2.0 * z;
    case Kind::exponential:
      return scale * std::exp(scale * z);
    case Kind::softplus:
      return logistic(scale * z);
  }
  return 0.0;
}

std::pair<double, double> NormalizerSpec::range(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  if (kind == Kind::square_plus_delta) {
    const double mn = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(lo * lo, hi * hi);
    return {mn + delta, std::max(lo * lo, hi * hi) + delta};
  }
  return {(*this)(lo), (*this)(hi)};
}

double NormalizerSpec::lipschitz(double r) const {
  r = std::abs(r);
  switch (kind) {
    case Kind::square_plus_delta:
      return 2.0 * r;
    case Kind::exponential:
      return scale * std::exp(scale * r);
    case Kind::softplus:
      return logistic(scale * r);
  }
  return 0.0;
}

// ------------------------------------------------------------------ p_sigma

DensityTrace p_sigma(std::span<const double> y, double dt, const NormalizerSpec& spec, double* z_out) {
  if (y.empty() || !(dt > 0.0)) throw ShapeError("p_sigma needs samples and dt > 0");
  require_finite(y, "p_sigma");
  spec.validate();
  DensityTrace d;
  d.dt = dt;
  d.samples.resize(y.size());
  double z = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    d.samples[j] = spec(y[j]);
    z += d.samples[j];
  }
  z *= dt;
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericError("p_sigma: normalisation constant not positive");
  for (double& x : d.samples) x /= z;
  if (z_out) *z_out = z;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const auto [smin, smax] = spec.range(*lo, *hi);
  d.lower = smin / z;
  d.upper = smax / z;
  if (*std::min_element(d.samples.begin(), d.samples.end()) < kDensityFloor) {
    for (double& x : d.samples) x = std::max(x, kDensityFloor);
    const double total = std::accumulate(d.samples.begin(), d.samples.end(), 0.0) * dt;
    for (double& x : d.samples) x /= total;
    d.floored = true;
    const auto [a, b] = std::minmax_element(d.samples.begin(), d.samples.end());
    d.lower = *a;
    d.upper = std::max(d.upper / total, *b);
  }
  return d;
}

DensityTrace p_sigma(const Trace& y, const NormalizerSpec& spec) { return p_sigma(y.samples, y.dt, spec); }

// ----------------------------------------------------------------------- W2

namespace {

void check_pair(std::span<const double> f, std::span<const double> g, double dt) {
  if (f.size() != g.size() || f.empty()) throw ShapeError("w2: densities must share a non-empty axis");
  if (!(dt > 0.0)) throw ShapeError("w2: dt must be positive");
}

std::vector<double> cumulative(std::span<const double> p, double dt, std::vector<double>& dens) {
  const std::size_t n = p.size();
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw PreconditionError("w2: densities must be non-negative");
    total += x;
  }
  total *= dt;
  if (std::abs(total - 1.0) > 1e-8) throw PreconditionError("w2: density does not integrate to 1");
  dens.resize(n);
  std::vector<double> c(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    dens[i] = p[i] / total;
    c[i + 1] = c[i] + dens[i] * dt;
  }
  c[n] = 1.0;
  return c;
}

// Merges the quantile functions of two cell densities.  When grad is
// non-empty, also accumulates d W2^2 / d f_k.
double w2_cells(std::span<const double> f, std::span<const double> g, double dt, std::span<double> grad) {
  const std::size_t n = f.size();
  std::vector<double> pf, pg;
  const auto F = cumulative(f, dt, pf);
  const auto G = cumulative(g, dt, pg);
  const bool want = !grad.empty();
  std::vector<double> A(want ? n : 0, 0.0), C(want ? n : 0, 0.0);
  double total = 0.0;
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < n) {
    const double sb = std::min(F[i + 1], G[j + 1]);
    // zero-density cells only carry roundoff-length segments
    if (sb > s && pf[i] > 0.0 && pg[j] > 0.0) {
      const double lo_i = static_cast<double>(i) * dt;
      const double lo_j = static_cast<double>(j) * dt;
      const double ea = std::clamp((s - F[i]) / pf[i], 0.0, dt);
      const double eb = std::clamp((sb - F[i]) / pf[i], 0.0, dt);
      const double ya = lo_j + std::clamp((s - G[j]) / pg[j], 0.0, dt);
      const double yb = lo_j + std::clamp((sb - G[j]) / pg[j], 0.0, dt);
      const double da = lo_i + ea - ya;
      const double db = lo_i + eb - yb;
      const double len = sb - s;
      total += len * (da * da + da * db + db * db) / 3.0;
      if (want) {
        A[i] += len * (2.0 * da * ea + da * eb + db * ea + 2.0 * db * eb) / (6.0 * pf[i]);
        C[i] += len * (da + db) / (2.0 * pf[i]);
      }
    }
    const bool adv_i = F[i + 1] <= sb;
    const bool adv_j = G[j + 1] <= sb;
    s = sb;
    if (adv_i) ++i;
    if (adv_j) ++j;
  }
  if (want) {
    double tail = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      grad[k] = -2.0 * (A[k] + dt * tail);
      tail += C[k];
    }
  }
  return total;
}

double w2_atoms(std::span<const double> f, std::span<const double> g, double dt) {
  const std::size_t n = f.size();
  std::vector<double> pf, pg;
  const auto F = cumulative(f, dt, pf);
  const auto G = cumulative(g, dt, pg);
  double total = 0.0;
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < n) {
    const double sb = std::min(F[i + 1], G[j + 1]);
    if (sb > s) {
      const double d = (static_cast<double>(i) - static_cast<double>(j)) * dt;
      total += (sb - s) * d * d;
    }
    const bool adv_i = F[i + 1] <= sb;
    const bool adv_j = G[j + 1] <= sb;
    s = sb;
    if (adv_i) ++i;
    if (adv_j) ++j;
  }
  return total;
}

}  // namespace

double w2_squared(std::span<const double> f, std::span<const double> g, double dt, MassModel model) {
  check_pair(f, g, dt);
  return model == MassModel::cells ? w2_cells(f, g, dt, {}) : w2_atoms(f, g, dt);
}

double w2_1d(const DensityTrace& f, const DensityTrace& g, MassModel model) {
  if (f.dt != g.dt) throw ShapeError("w2: densities have different dt");
  return std::sqrt(std::max(0.0, w2_squared(f.samples, g.samples, f.dt, model)));
}

double w2_squared_gradient(std::span<const double> f, std::span<const double> g, double dt,
                           std::span<double> grad) {
  check_pair(f, g, dt);
  if (grad.size() != f.size()) throw ShapeError("w2 gradient: output size mismatch");
  return w2_cells(f, g, dt, grad);
}

// -------------------------------------------------------------------- H^-1

namespace {

// Exact H^-1 weight of DCT mode k for a piecewise-constant function: the
// cosine coefficients of all aliases 2nm +- k summed in closed form.
double mode_weight(std::size_t k, std::size_t n, double t_span) {
  const double x = std::numbers::pi * static_cast<double>(k) / (2.0 * static_cast<double>(n));
  const double s = std::sin(x), c = std::cos(x);
  const double nn = static_cast<double>(n);
  return t_span * t_span * t_span * (1.0 + 2.0 * c * c) / (24.0 * nn * nn * s * s);
}

}  // namespace

double hminus1_squared(std::span<const double> h, double dt) {
  const std::size_t n = h.size();
  if (n == 0) return 0.0;
  std::vector<double> y(n);
  detail::dct2(h, y);
  const double t = static_cast<double>(n) * dt;
  double sum = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double a = y[k] / static_cast<double>(n);
    sum += a * a * mode_weight(k, n, t);
  }
  return sum;
}

void hminus1_gram(std::span<const double> h, double dt, std::span<double> out) {
  const std::size_t n = h.size();
  if (out.size() != n) throw ShapeError("hminus1_gram: output size mismatch");
  if (n == 0) return;
  std::vector<double> y(n);
  detail::dct2(h, y);
  const double t = static_cast<double>(n) * dt;
  const double nn = static_cast<double>(n);
  y[0] = 0.0;
  for (std::size_t k = 1; k < n; ++k) y[k] = (y[k] / nn) * mode_weight(k, n, t) / nn;
  detail::dct3(y, out);
}

double hminus1_norm(std::span<const double> h, double dt) {
  require_finite(h, "hminus1_norm");
  if (!(dt > 0.0)) throw ShapeError("hminus1_norm: dt must be positive");
  const double scale = max_abs(h);
  if (scale == 0.0) return 0.0;
  const double mean = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
  if (std::abs(mean) > 1e-8 * scale)
    throw PreconditionError("hminus1_norm: trace has a zero-frequency component; apply remove_zero_frequency first");
  return std::sqrt(std::max(0.0, hminus1_squared(h, dt)));
}

double hminus1_norm(const Trace& h) { return hminus1_norm(h.samples, h.dt); }

double weighted_hminus1_squared_flux(std::span<const double> p, std::span<const double> f, double dt) {
  const std::size_t n = p.size();
  if (f.size() != n) throw ShapeError("weighted H^-1: size mismatch");
  double sum = 0.0;
  double da = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = da + p[i] * dt;
    sum += (da * da + da * db + db * db) / (3.0 * f[i]);
    da = db;
  }
  return sum * dt;
}

void weighted_hminus1_flux_gram(std::span<const double> p, std::span<const double> f, double dt,
                                std::span<double> out) {
  const std::size_t n = p.size();
  if (f.size() != n || out.size() != n) throw ShapeError("weighted H^-1 gram: size mismatch");
  // Face values D_0 .. D_n of the cumulative flux, D_0 = 0.
  std::vector<double> d(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i + 1] = d[i] + p[i] * dt;
  // g_j = dQ/dD_j / 2 for j = 1..n.
  double tail = 0.0;
  for (std::size_t j = n; j >= 1; --j) {
    double g = 0.0;
    const double cl = dt / (3.0 * f[j - 1]);
    g += 0.5 * cl * (d[j - 1] + 2.0 * d[j]);
    if (j < n) {
      const double cr = dt / (3.0 * f[j]);
      g += 0.5 * cr * (2.0 * d[j] + d[j + 1]);
    }
    tail += g;
    out[j - 1] = dt * tail;
  }
}

double weighted_hminus1_norm(std::span<const double> h, std::span<const double> f, double dt) {
  if (h.size() != f.size() || h.empty()) throw ShapeError("weighted H^-1: size mismatch");
  require_finite(h, "weighted_hminus1_norm");
  std::vector<double> p(h.size());
  double m = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(f[i] > 0.0)) throw DomainError("weighted H^-1: weight must be bounded below by a positive constant");
    p[i] = h[i] * f[i];
    m += p[i];
    scale += std::abs(p[i]);
  }
  if (std::abs(m) > 1e-8 * scale)
    throw PreconditionError("weighted H^-1: h must have zero f-weighted mean");
  return std::sqrt(std::max(0.0, weighted_hminus1_squared_flux(p, f, dt)));
}

double weighted_hminus1_norm(const Trace& h, const DensityTrace& f) {
  if (h.dt != f.dt) throw ShapeError("weighted H^-1: dt mismatch");
  return weighted_hminus1_norm(h.samples, f.samples, h.dt);
}

// --------------------------------------------------------- theorem checks

LinearizationTable check_linearization(const DensityTrace& f, const Trace& h, const std::vector<double>& eps) {
  if (h.samples.size() != f.samples.size() || h.dt != f.dt) throw ShapeError("check_linearization: shape mismatch");
  LinearizationTable t;
  t.eps = eps;
  const double target = weighted_hminus1_norm(h, f);
  t.target = target * target;
  std::vector<double> g(f.samples.size());
  for (double e : eps) {
    if (!(e != 0.0)) throw DomainError("check_linearization: eps must be non-zero");
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = (1.0 + e * h.samples[i]) * f.samples[i];
      if (!(g[i] > 0.0)) throw DomainError("check_linearization: (1 + eps h) f is not positive");
    }
    t.ratio.push_back(w2_squared(f.samples, g, f.dt) / (e * e));
  }
  return t;
}

EquivalenceBounds check_equivalence_bounds(const DensityTrace& f, const DensityTrace& g) {
  if (f.samples.size() != g.samples.size() || f.dt != g.dt) throw ShapeError("equivalence: shape mismatch");
  const double a = std::min(f.lower, g.lower);
  const double b = std::max(f.upper, g.upper);
  if (!(a > 0.0) || !(b >= a)) throw DomainError("equivalence: invalid density bounds");
  std::vector<double> diff(f.samples.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = f.samples[i] - g.samples[i];
  const double h = std::sqrt(std::max(0.0, hminus1_squared(diff, f.dt)));
  EquivalenceBounds r;
  r.lower = h / std::sqrt(b);
  r.upper = h / std::sqrt(a);
  r.w2 = w2_1d(f, g);
  return r;
}

double psigma_lipschitz(const NormalizerSpec& spec, double r, double t_span) {
  const auto [k, K] = spec.range(-std::abs(r), std::abs(r));
  const double L = spec.lipschitz(r);
  return L / (t_span * k) * (1.0 + K / k);
}

}  // namespace gfwi
