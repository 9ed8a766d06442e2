#include "gibbsfwi/potentials.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "gibbsfwi/error.hpp"
#include "gibbsfwi/parallel.hpp"

namespace gfwi {

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::L2:
      return "L2";
    case PotentialKind::Hm1:
      return "Hm1";
    case PotentialKind::M:
      return "M";
    case PotentialKind::W2:
      return "W2";
  }
  return "?";
}

PotentialKind parse_potential_kind(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "l2") return PotentialKind::L2;
  if (s == "hm1" || s == "h-1") return PotentialKind::Hm1;
  if (s == "m") return PotentialKind::M;
  if (s == "w2") return PotentialKind::W2;
  throw ConfigError("unknown potential '" + name + "'");
}

void PotentialSpec::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("potential beta must be positive");
  if (!(norm_constant > 0.0) || !std::isfinite(norm_constant))
    throw ConfigError("potential norm_constant must be positive");
  const bool needs = kind == PotentialKind::M || kind == PotentialKind::W2;
  if (needs && !normalizer) throw ConfigError(to_string(kind) + " potential needs a normalizer");
  if (!needs && normalizer) throw ConfigError(to_string(kind) + " potential takes no normalizer");
  if (normalizer) normalizer->validate();
}

NormalizerSpec default_normalizer(const Seismogram& y) {
  const double a = y.max_abs();
  if (!(a > 0.0)) throw DomainError("default normalizer needs non-zero data");
  return NormalizerSpec::square_plus_delta(0.1 * a * a);
}

// ----------------------------------------------------------- trace level

namespace {

struct Normalized {
  std::vector<double> p;
  std::vector<double> dsig;  // sigma'(d) / Z
  double dt;
};

Normalized normalized(const NormalizerSpec& spec, std::span<const double> d, double dt) {
  double z = 0.0;
  Normalized n;
  n.dt = dt;
  n.p = p_sigma(d, dt, spec, &z).samples;
  n.dsig.resize(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) n.dsig[j] = spec.derivative(d[j]) / z;
  return n;
}

// (Jp^T g)_i = sigma'(d_i)/Z (g_i - dt sum_j g_j p_j).
void jp_transpose(const Normalized& n, std::span<const double> g, std::span<double> out) {
  double c = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) c += g[j] * n.p[j];
  c *= n.dt;
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = n.dsig[i] * (g[i] - c);
}

// (Jp v)_j = sigma'(d_j)/Z v_j - p_j dt sum_k sigma'(d_k)/Z v_k.
void jp(const Normalized& n, std::span<const double> v, std::vector<double>& out) {
  out.resize(v.size());
  double c = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) c += n.dsig[k] * v[k];
  c *= n.dt;
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = n.dsig[j] * v[j] - n.p[j] * c;
}

const NormalizerSpec& normalizer_of(const PotentialSpec& spec) {
  if (!spec.normalizer) throw ConfigError(to_string(spec.kind) + " potential needs a normalizer");
  return *spec.normalizer;
}

}  // namespace

double trace_misfit(const PotentialSpec& spec, std::span<const double> pred, std::span<const double> obs,
                    double dt, std::span<double> adjoint) {
  const std::size_t n = pred.size();
  if (obs.size() != n) throw ShapeError("trace_misfit: trace length mismatch");
  const bool want = !adjoint.empty();
  if (want && adjoint.size() != n) throw ShapeError("trace_misfit: adjoint length mismatch");
  switch (spec.kind) {
    case PotentialKind::L2: {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double r = pred[j] - obs[j];
        s += r * r;
        if (want) adjoint[j] = r * dt;
      }
      return s * dt;
    }
    case PotentialKind::Hm1: {
      std::vector<double> r(n);
      for (std::size_t j = 0; j < n; ++j) r[j] = pred[j] - obs[j];
      if (want) hminus1_gram(r, dt, adjoint);
      return hminus1_squared(r, dt);
    }
    case PotentialKind::M: {
      const auto& sig = normalizer_of(spec);
      const Normalized np = normalized(sig, pred, dt);
      const auto q = p_sigma(obs, dt, sig).samples;
      double s = 0.0;
      std::vector<double> g(want ? n : 0);
      for (std::size_t j = 0; j < n; ++j) {
        if (!spec.m_model_denominator) {
          const double r = (np.p[j] - q[j]) / q[j];
          s += r * r;
          if (want) g[j] = r / q[j] * dt;
        } else {
          const double r = 1.0 - q[j] / np.p[j];
          s += r * r;
          if (want) g[j] = r * q[j] / (np.p[j] * np.p[j]) * dt;
        }
      }
      if (want) jp_transpose(np, g, adjoint);
      return s * dt;
    }
    case PotentialKind::W2: {
      const auto& sig = normalizer_of(spec);
      const Normalized np = normalized(sig, pred, dt);
      const auto q = p_sigma(obs, dt, sig).samples;
      if (!want) return w2_squared(np.p, q, dt);
      std::vector<double> g(n);
      const double w = w2_squared_gradient(np.p, q, dt, g);
      for (double& x : g) x *= 0.5;
      jp_transpose(np, g, adjoint);
      return w;
    }
  }
  return 0.0;
}

void trace_gauss_newton(const PotentialSpec& spec, std::span<const double> pred, std::span<const double> obs,
                        double dt, std::span<const double> v, std::span<double> out) {
  const std::size_t n = pred.size();
  if (obs.size() != n || v.size() != n || out.size() != n) throw ShapeError("trace_gauss_newton: size mismatch");
  switch (spec.kind) {
    case PotentialKind::L2:
      for (std::size_t j = 0; j < n; ++j) out[j] = v[j] * dt;
      return;
    case PotentialKind::Hm1:
      hminus1_gram(v, dt, out);
      return;
    case PotentialKind::M: {
      const auto& sig = normalizer_of(spec);
      const Normalized np = normalized(sig, pred, dt);
      const auto q = p_sigma(obs, dt, sig).samples;
      std::vector<double> w;
      jp(np, v, w);
      for (std::size_t j = 0; j < n; ++j) {
        const double c = spec.m_model_denominator ? q[j] / (np.p[j] * np.p[j]) : 1.0 / q[j];
        w[j] *= c * c * dt;
      }
      jp_transpose(np, w, out);
      return;
    }
    case PotentialKind::W2: {
      const auto& sig = normalizer_of(spec);
      const Normalized np = normalized(sig, pred, dt);
      std::vector<double> w, h(n);
      jp(np, v, w);
      weighted_hminus1_flux_gram(w, np.p, dt, h);
      jp_transpose(np, h, out);
      return;
    }
  }
}

LossEval seismogram_misfit(const PotentialSpec& spec, const Seismogram& pred, const Seismogram& obs,
                           Seismogram* adjoint) {
  spec.validate();
  if (!pred.same_shape(obs)) throw ShapeError("predicted and observed seismograms differ in shape");
  if (spec.kind == PotentialKind::Hm1) {
    for (std::size_t i = 0; i < obs.trace_count(); ++i) {
      const auto t = obs.trace(i);
      double mean = 0.0, scale = 0.0;
      for (double x : t) {
        mean += x;
        scale = std::max(scale, std::abs(x));
      }
      mean /= static_cast<double>(t.size());
      if (std::abs(mean) > 1e-8 * scale)
        throw PreconditionError("Hm1 potential needs zero-mean data; apply remove_zero_frequency");
    }
  }
  LossEval e;
  e.per_trace.resize(pred.trace_count());
  if (adjoint) *adjoint = Seismogram(pred.n_sources, pred.n_receivers, pred.nt, pred.dt);
  for (std::size_t i = 0; i < pred.trace_count(); ++i) {
    std::span<double> adj;
    if (adjoint) adj = adjoint->trace(i);
    e.per_trace[i] = trace_misfit(spec, pred.trace(i), obs.trace(i), pred.dt, adj);
    if (adjoint) remove_zero_frequency_inplace(adj);
  }
  for (double x : e.per_trace) e.value += 0.5 * x;
  return e;
}

// ---------------------------------------------------------- ForwardModel

ForwardModel::ForwardModel(const Grid2D& grid, AcquisitionGeometry geometry, SolverOptions options,
                           SlownessMap map, double water_velocity)
    : map_(map),
      water_velocity_(water_velocity),
      solver_(grid, std::move(geometry), options, std::max(map.v_max(), water_velocity)) {}

std::vector<double> ForwardModel::slowness2(std::span<const double> u) const {
  return model(u).slowness2();
}

std::vector<double> ForwardModel::slowness2_derivative(std::span<const double> u) const {
  const Grid2D& g = grid();
  if (u.size() != g.size()) throw ShapeError("latent field size does not match grid");
  std::vector<double> d(g.size(), 0.0);
  for (int iz = 0; iz < g.nz; ++iz) {
    if (g.is_water(iz)) continue;
    for (int ix = 0; ix < g.nx; ++ix) d[g.index(ix, iz)] = map_.derivative(u[g.index(ix, iz)]);
  }
  return d;
}

VelocityModel ForwardModel::model(std::span<const double> u) const {
  if (u.size() != grid().size()) throw ShapeError("latent field size does not match grid");
  VelocityModel m{Field2D(grid(), std::vector<double>(u.begin(), u.end())), map_, water_velocity_};
  return m;
}

Seismogram ForwardModel::predict(std::span<const double> u) const {
  auto s = solver_.forward(slowness2(u));
  remove_zero_frequency_inplace(s);
  return s;
}

LossEval evaluate_potential_slowness(const PotentialSpec& spec, const WaveSolver& solver, std::span<const double> m,
                                     const Seismogram& y, bool with_gradient) {
  spec.validate();
  const auto& geo = solver.geometry();
  if (y.n_sources != geo.n_sources() || y.n_receivers != geo.n_receivers() || y.nt != geo.nt)
    throw ShapeError("data do not match the acquisition geometry");
  if (!with_gradient) {
    auto pred = solver.forward(m);
    remove_zero_frequency_inplace(pred);
    return seismogram_misfit(spec, pred, y);
  }
  // Validate the data once (mean check for Hm1) before the solves.
  if (spec.kind == PotentialKind::Hm1) seismogram_misfit(spec, y, y);
  const int nr = geo.n_receivers();
  const int nt = geo.nt;
  LossEval e;
  e.per_trace.assign(static_cast<std::size_t>(geo.n_sources()) * nr, 0.0);
  auto grad_m = solver.forward_adjoint(m, [&](int s, std::span<const double> pred, std::span<double> res) {
    std::vector<double> trace(nt);
    for (int r = 0; r < nr; ++r) {
      std::copy_n(pred.begin() + static_cast<std::ptrdiff_t>(r) * nt, nt, trace.begin());
      remove_zero_frequency_inplace(trace);
      auto adj = res.subspan(static_cast<std::size_t>(r) * nt, nt);
      e.per_trace[y.flat_index(s, r)] = trace_misfit(spec, trace, y.trace(s, r), y.dt, adj);
      remove_zero_frequency_inplace(adj);
    }
  });
  for (double x : e.per_trace) e.value += 0.5 * x;
  e.gradient = Field2D(solver.grid(), std::move(grad_m));
  return e;
}

LossEval evaluate_potential(const PotentialSpec& spec, const ForwardModel& forward, std::span<const double> u,
                            const Seismogram& y, bool with_gradient) {
  LossEval e = evaluate_potential_slowness(spec, forward.solver(), forward.slowness2(u), y, with_gradient);
  if (e.gradient) {
    const auto dm = forward.slowness2_derivative(u);
    for (std::size_t i = 0; i < dm.size(); ++i) e.gradient->values[i] *= dm[i];
  }
  return e;
}

LossEval eval_l2(const ForwardModel& forward, std::span<const double> u, const Seismogram& y, bool with_gradient) {
  PotentialSpec s;
  s.kind = PotentialKind::L2;
  return evaluate_potential(s, forward, u, y, with_gradient);
}

LossEval eval_hm1(const ForwardModel& forward, std::span<const double> u, const Seismogram& y, bool with_gradient) {
  PotentialSpec s;
  s.kind = PotentialKind::Hm1;
  return evaluate_potential(s, forward, u, y, with_gradient);
}

LossEval eval_m(const ForwardModel& forward, std::span<const double> u, const Seismogram& y,
                const NormalizerSpec& normalizer, bool with_gradient) {
  PotentialSpec s;
  s.kind = PotentialKind::M;
  s.normalizer = normalizer;
  return evaluate_potential(s, forward, u, y, with_gradient);
}

LossEval eval_w2(const ForwardModel& forward, std::span<const double> u, const Seismogram& y,
                 const NormalizerSpec& normalizer, bool with_gradient) {
  PotentialSpec s;
  s.kind = PotentialKind::W2;
  s.normalizer = normalizer;
  return evaluate_potential(s, forward, u, y, with_gradient);
}

PotentialSpec calibrate(PotentialSpec spec, const ForwardModel& forward, std::span<const double> u0,
                        const Seismogram& y) {
  spec.norm_constant = 1.0;
  const double v = evaluate_potential(spec, forward, u0, y, false).value;
  if (!(v > 0.0) || !std::isfinite(v))
    throw NumericError("calibration failed: loss at the calibration point is " + std::to_string(v));
  spec.norm_constant = v;
  return spec;
}

// ---------------------------------------------------------------- bounds

double hminus1_inverse_constant(int n, double dt) {
  if (n < 2) return 0.0;
  // ||h||^2 = T/2 sum a_k^2 and ||h||^2_{H^-1} = sum a_k^2 w_k with w_k
  // decreasing in k, so the worst mode is k = n - 1.
  const double t = n * dt;
  const double x = std::numbers::pi * (n - 1) / (2.0 * n);
  const double s = std::sin(x), c = std::cos(x);
  const double w = t * t * t * (1.0 + 2.0 * c * c) / (24.0 * double(n) * n * s * s);
  return std::sqrt(0.5 * t / w);
}

PotentialBounds potential_bounds(const PotentialSpec& spec, std::size_t n_traces, int nt, double dt, double r) {
  spec.validate();
  const double t = nt * dt;
  const double nn = static_cast<double>(n_traces);
  const double cp = t / std::numbers::pi;  // Poincare: ||h||_{H^-1} <= cp ||h||
  PotentialBounds b;
  switch (spec.kind) {
    case PotentialKind::L2:
      b.m0 = 0.5 * nn * t * 4.0 * r * r;
      b.m2 = 2.0 * r * std::sqrt(t) * std::sqrt(nn);
      break;
    case PotentialKind::Hm1:
      b.m0 = 0.5 * nn * cp * cp * t * 4.0 * r * r;
      b.m2 = 2.0 * r * std::sqrt(t) * cp * std::sqrt(nn);
      break;
    case PotentialKind::M: {
      const auto [k, K] = spec.normalizer->range(-r, r);
      const double pmin = k / (K * t), pmax = K / (k * t);
      const double rho = (pmax - pmin) / pmin;
      b.m0 = 0.5 * nn * t * rho * rho;
      const double cl = psigma_lipschitz(*spec.normalizer, r, t);
      double sup_grad = rho * pmax / (pmin * pmin);
      if (spec.m_model_denominator) sup_grad = (1.0 + pmax / pmin) / pmin;
      b.m2 = sup_grad * std::sqrt(t) * cl * std::sqrt(nn);
      if (spec.m_model_denominator) b.m0 = 0.5 * nn * t * std::pow(1.0 + pmax / pmin, 2);
      break;
    }
    case PotentialKind::W2: {
      const auto [k, K] = spec.normalizer->range(-r, r);
      const double pmin = k / (K * t);
      const double cl = psigma_lipschitz(*spec.normalizer, r, t);
      b.m0 = 0.5 * nn * t * t;
      b.m2 = t * cp * cl * hminus1_inverse_constant(nt, dt) * std::sqrt(nn) / std::sqrt(pmin);
      break;
    }
  }
  return b;
}

double seismogram_l2_norm(const Seismogram& s) {
  double sum = 0.0;
  for (double x : s.data) sum += x * x;
  return std::sqrt(sum * s.dt);
}

double seismogram_hm1_norm(const Seismogram& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.trace_count(); ++i) sum += hminus1_squared(s.trace(i), s.dt);
  return std::sqrt(sum);
}

}  // namespace gfwi
