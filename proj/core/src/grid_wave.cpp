#include "gibbsfwi/grid_wave.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gibbsfwi/error.hpp"
#include "gibbsfwi/parallel.hpp"

namespace gfwi {

// ---------------------------------------------------------------- SlownessMap

SlownessMap::SlownessMap(double v_min, double v_max) : v_min_(v_min), v_max_(v_max) {
  if (!(v_min > 0.0) || !(v_min < v_max))
    throw ConfigError("slowness map needs 0 < v_min < v_max");
  const double a = 1.0 / (v_min * v_min);
  const double b = 1.0 / (v_max * v_max);
  alpha_plus_ = 0.5 * (a + b);
  alpha_minus_ = 0.5 * (a - b);
}

double SlownessMap::slowness2(double u) const { return alpha_minus_ * std::tanh(u) + alpha_plus_; }

double SlownessMap::derivative(double u) const {
  const double c = std::cosh(u);
  return alpha_minus_ / (c * c);
}

double SlownessMap::latent(double m) const {
  const double r = (m - alpha_plus_) / alpha_minus_;
  if (!(std::abs(r) < 1.0)) throw DomainError("squared slowness outside the map range");
  return std::atanh(r);
}

double SlownessMap::velocity(double u) const { return 1.0 / std::sqrt(slowness2(u)); }

double SlownessMap::latent_from_velocity(double v) const { return latent(1.0 / (v * v)); }

// -------------------------------------------------------------- VelocityModel

std::vector<double> VelocityModel::slowness2() const {
  const Grid2D& g = u.grid;
  std::vector<double> m(g.size());
  const double mw = 1.0 / (water_velocity * water_velocity);
  for (int iz = 0; iz < g.nz; ++iz) {
    const bool water = g.is_water(iz);
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t i = g.index(ix, iz);
      m[i] = water ? mw : map.slowness2(u.values[i]);
    }
  }
  return m;
}

Field2D VelocityModel::velocity() const {
  Field2D v(u.grid);
  const auto m = slowness2();
  for (std::size_t i = 0; i < m.size(); ++i) v.values[i] = 1.0 / std::sqrt(m[i]);
  return v;
}

void VelocityModel::validate() const {
  u.grid.validate();
  if (u.values.size() != u.grid.size()) throw ShapeError("latent field size does not match grid");
  if (!(map.v_min() > 0.0) || !(map.v_min() < map.v_max()))
    throw ConfigError("velocity model needs 0 < v_min < v_max");
  if (!(water_velocity > 0.0)) throw ConfigError("water velocity must be positive");
  for (double x : u.values)
    if (!std::isfinite(x)) throw DomainError("latent field has non-finite entries");
}

// -------------------------------------------------------------------- Wavelet

Wavelet Wavelet::ricker(double peak_frequency, double delay, double amplitude) {
  if (!(peak_frequency > 0.0)) throw ConfigError("Ricker peak frequency must be positive");
  Wavelet w;
  w.kind = Kind::ricker;
  w.peak_frequency = peak_frequency;
  w.delay = delay < 0.0 ? 1.2 / peak_frequency : delay;
  w.amplitude = amplitude;
  return w;
}

Wavelet Wavelet::from_samples(std::vector<double> values) {
  Wavelet w;
  w.kind = Kind::samples;
  w.samples = std::move(values);
  return w;
}

double Wavelet::value(int step, double dt) const {
  const double t = step * dt;
  if (t > cutoff) return 0.0;
  if (kind == Kind::samples) {
    return step >= 0 && static_cast<std::size_t>(step) < samples.size() ? amplitude * samples[step] : 0.0;
  }
  const double a = std::numbers::pi * std::numbers::pi * peak_frequency * peak_frequency *
                   (t - delay) * (t - delay);
  return amplitude * (1.0 - 2.0 * a) * std::exp(-a);
}

// -------------------------------------------------------- AcquisitionGeometry

void AcquisitionGeometry::validate(const Grid2D& grid) const {
  if (sources.empty()) throw ConfigError("acquisition needs at least one source");
  if (receivers.empty()) throw ConfigError("acquisition needs at least one receiver");
  if (!(dt > 0.0) || nt < 1) throw ConfigError("time axis needs dt > 0 and nt >= 1");
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& src = sources[s];
    if (src.wavelet < 0 || static_cast<std::size_t>(src.wavelet) >= wavelets.size())
      throw ConfigError("source " + std::to_string(s) + " references unknown wavelet");
    if (!grid.contains(src.position.x, src.position.z))
      throw GeometryError("source " + std::to_string(s) + " outside the grid");
  }
  for (std::size_t r = 0; r < receivers.size(); ++r)
    if (!grid.contains(receivers[r].x, receivers[r].z))
      throw GeometryError("receiver " + std::to_string(r) + " outside the grid");
}

// ----------------------------------------------------------------- Seismogram

Seismogram::Seismogram(int sources, int receivers, int steps, double step)
    : n_sources(sources), n_receivers(receivers), nt(steps), dt(step),
      data(static_cast<std::size_t>(sources) * receivers * steps, 0.0) {
  if (sources < 0 || receivers < 0 || steps < 0) throw ShapeError("negative seismogram dimension");
}

std::span<double> Seismogram::trace(std::size_t flat) {
  return std::span<double>(data).subspan(flat * nt, nt);
}

std::span<const double> Seismogram::trace(std::size_t flat) const {
  return std::span<const double>(data).subspan(flat * nt, nt);
}

std::span<double> Seismogram::source_block(int source) {
  const std::size_t len = static_cast<std::size_t>(n_receivers) * nt;
  return std::span<double>(data).subspan(source * len, len);
}

std::span<const double> Seismogram::source_block(int source) const {
  const std::size_t len = static_cast<std::size_t>(n_receivers) * nt;
  return std::span<const double>(data).subspan(source * len, len);
}

bool Seismogram::same_shape(const Seismogram& o) const {
  return n_sources == o.n_sources && n_receivers == o.n_receivers && nt == o.nt && dt == o.dt;
}

bool Seismogram::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

double Seismogram::max_abs() const {
  double m = 0.0;
  for (double x : data) m = std::max(m, std::abs(x));
  return m;
}

void remove_zero_frequency_inplace(std::span<double> trace) {
  if (trace.empty()) return;
  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= static_cast<double>(trace.size());
  for (double& x : trace) x -= mean;
}

void remove_zero_frequency_inplace(Seismogram& s) {
  for (std::size_t i = 0; i < s.trace_count(); ++i) remove_zero_frequency_inplace(s.trace(i));
  s.zero_mean = true;
}

Seismogram remove_zero_frequency(const Seismogram& s) {
  Seismogram out = s;
  remove_zero_frequency_inplace(out);
  return out;
}

// ------------------------------------------------------------- PaddedDomain

double max_stable_dt(const Grid2D& grid, double v_max) {
  // Largest eigenvalue of the negative 4th-order Laplacian is below
  // 16/3 (dx^-2 + dz^-2); leapfrog needs dt^2 v^2 rho / 4 <= 1.
  const double rho = 16.0 / 3.0 * (1.0 / (grid.dx * grid.dx) + 1.0 / (grid.dz * grid.dz));
  return 0.9 * 2.0 / (v_max * std::sqrt(rho));
}

PaddedDomain::PaddedDomain(const Grid2D& grid, const SolverOptions& options, double v_max)
    : grid_(grid) {
  const int w = options.sponge_cells;
  if (w < 0) throw ConfigError("sponge width must be non-negative");
  if (w > 0 && !(options.sponge_reflection > 0.0 && options.sponge_reflection < 1.0))
    throw ConfigError("sponge reflection must lie in (0, 1)");
  pad_left_ = w;
  pad_top_ = options.absorbing_top ? w : 0;
  nx_ = grid.nx + 2 * w;
  nz_ = grid.nz + pad_top_ + w;
  stride_ = nx_ + 2 * halo;
  damping_.assign(storage_size(), 0.0);
  if (w == 0) return;
  const double thickness = w * std::min(grid.dx, grid.dz);
  const double gmax = 3.0 * v_max * std::log(1.0 / options.sponge_reflection) / (2.0 * thickness);
  for (int pz = 0; pz < nz_; ++pz) {
    double dzc = 0.0;
    if (pz < pad_top_) dzc = pad_top_ - pz;
    if (pz >= pad_top_ + grid.nz) dzc = pz - (pad_top_ + grid.nz - 1);
    for (int px = 0; px < nx_; ++px) {
      double dxc = 0.0;
      if (px < pad_left_) dxc = pad_left_ - px;
      if (px >= pad_left_ + grid.nx) dxc = px - (pad_left_ + grid.nx - 1);
      const double d = std::max(dxc, dzc) / w;
      damping_[at(px, pz)] = gmax * d * d;
    }
  }
}

std::vector<double> PaddedDomain::extend(std::span<const double> physical) const {
  if (physical.size() != grid_.size()) throw ShapeError("extend: field size does not match grid");
  std::vector<double> out(storage_size(), 0.0);
  for (int pz = 0; pz < nz_; ++pz) {
    const int iz = std::clamp(pz - pad_top_, 0, grid_.nz - 1);
    for (int px = 0; px < nx_; ++px) {
      const int ix = std::clamp(px - pad_left_, 0, grid_.nx - 1);
      out[at(px, pz)] = physical[grid_.index(ix, iz)];
    }
  }
  return out;
}

void PaddedDomain::fold(std::span<const double> padded, std::span<double> physical) const {
  if (padded.size() != storage_size() || physical.size() != grid_.size())
    throw ShapeError("fold: size mismatch");
  for (int pz = 0; pz < nz_; ++pz) {
    const int iz = std::clamp(pz - pad_top_, 0, grid_.nz - 1);
    for (int px = 0; px < nx_; ++px) {
      const int ix = std::clamp(px - pad_left_, 0, grid_.nx - 1);
      physical[grid_.index(ix, iz)] += padded[at(px, pz)];
    }
  }
}

void PaddedDomain::laplacian(const double* in, double* out) const {
  constexpr double c0 = -5.0 / 2.0, c1 = 4.0 / 3.0, c2 = -1.0 / 12.0;
  const double ax = 1.0 / (grid_.dx * grid_.dx);
  const double az = 1.0 / (grid_.dz * grid_.dz);
  const std::ptrdiff_t s = stride_;
  const double centre = c0 * (ax + az);
  for (int pz = 0; pz < nz_; ++pz) {
    const std::size_t row = at(0, pz);
    const double* p = in + row;
    double* o = out + row;
    for (int px = 0; px < nx_; ++px) {
      o[px] = centre * p[px] + ax * (c1 * (p[px - 1] + p[px + 1]) + c2 * (p[px - 2] + p[px + 2])) +
              az * (c1 * (p[px - s] + p[px + s]) + c2 * (p[px - 2 * s] + p[px + 2 * s]));
    }
  }
}

std::vector<double> PaddedDomain::interior(std::span<const double> halo_array) const {
  if (halo_array.size() != storage_size()) throw ShapeError("interior: size mismatch");
  std::vector<double> out(interior_size());
  for (int pz = 0; pz < nz_; ++pz)
    std::copy_n(halo_array.begin() + at(0, pz), nx_, out.begin() + static_cast<std::ptrdiff_t>(pz) * nx_);
  return out;
}

std::vector<double> PaddedDomain::embed(std::span<const double> compact) const {
  if (compact.size() != interior_size()) throw ShapeError("embed: size mismatch");
  std::vector<double> out(storage_size(), 0.0);
  for (int pz = 0; pz < nz_; ++pz)
    std::copy_n(compact.begin() + static_cast<std::ptrdiff_t>(pz) * nx_, nx_, out.begin() + at(0, pz));
  return out;
}

// ------------------------------------------------------------ ForwardHistory

void ForwardHistory::state(int source, int n, std::span<double> out) const {
  const auto& st = states.at(source);
  if (n < 0 || n > nt) throw ShapeError("history step out of range");
  const int j = n / stride;
  const int n0 = j * stride;
  const auto& a = st.at(j);
  if (out.size() != a.size()) throw ShapeError("history state size mismatch");
  if (n0 == n) {
    std::copy(a.begin(), a.end(), out.begin());
    return;
  }
  const int n1 = std::min((j + 1) * stride, nt);
  const auto& b = st.at(j + 1);
  const double w = static_cast<double>(n - n0) / (n1 - n0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
}

// ---------------------------------------------------------------- WaveSolver

WaveSolver::WaveSolver(const Grid2D& grid, AcquisitionGeometry geometry, SolverOptions options,
                       double v_max)
    : geometry_(std::move(geometry)), options_(options), v_max_(v_max) {
  grid.validate();
  geometry_.validate(grid);
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
  if (options_.history_stride < 1) throw ConfigError("history stride must be >= 1");
  const double limit = max_stable_dt(grid, v_max);
  if (geometry_.dt > limit)
    throw ConfigError("time step " + std::to_string(geometry_.dt) + " s violates the CFL bound " +
                      std::to_string(limit) + " s");
  domain_ = PaddedDomain(grid, options_, v_max);
  for (const auto& s : geometry_.sources)
    sources_.push_back({domain_.at_physical(grid.nearest_ix(s.position.x), grid.nearest_iz(s.position.z)),
                        s.wavelet});
  for (const auto& r : geometry_.receivers)
    receivers_.push_back(domain_.at_physical(grid.nearest_ix(r.x), grid.nearest_iz(r.z)));
}

void WaveSolver::check_model(std::span<const double> m) const {
  if (m.size() != grid().size()) throw ShapeError("slowness field size does not match grid");
  for (double x : m)
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("squared slowness must be positive and finite");
}

std::vector<double> WaveSolver::inverse_slowness(std::span<const double> m) const {
  check_model(m);
  auto q = domain_.extend(m);
  for (double& x : q) x = x > 0.0 ? 1.0 / x : 0.0;
  return q;
}

double WaveSolver::source_term(int source, int step) const {
  const auto& inj = sources_[source];
  return geometry_.wavelets[inj.wavelet].value(step, geometry_.dt) / (grid().dx * grid().dz);
}

namespace {

struct Coefficients {
  std::vector<double> a;  // 2 / b+
  std::vector<double> b;  // b- / b+
  std::vector<double> c;  // dt^2 q / b+
  std::vector<double> e;  // dt^2 / b+
};

Coefficients coefficients(const PaddedDomain& d, const std::vector<double>& q, double dt) {
  const std::size_t n = d.storage_size();
  Coefficients k{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                 std::vector<double>(n)};
  const auto& g = d.damping();
  for (std::size_t i = 0; i < n; ++i) {
    const double bp = 1.0 + 0.5 * g[i] * dt;
    const double bm = 1.0 - 0.5 * g[i] * dt;
    k.a[i] = 2.0 / bp;
    k.b[i] = bm / bp;
    k.c[i] = dt * dt * q[i] / bp;
    k.e[i] = dt * dt / bp;
  }
  return k;
}

}  // namespace

void WaveSolver::forward_one(const std::vector<double>& q, int source, std::span<double> traces,
                             std::vector<std::vector<double>>* states,
                             const StepObserver* observer) const {
  const std::size_t n = domain_.storage_size();
  const int nt = geometry_.nt;
  const auto k = coefficients(domain_, q, geometry_.dt);
  std::vector<double> prev(n, 0.0), cur(n, 0.0), next(n, 0.0), lap(n, 0.0);
  const std::size_t src = sources_[source].cell;
  const int stride = options_.history_stride;
  if (states) {
    states->clear();
    states->push_back(cur);
  }
  const std::size_t nr = receivers_.size();
  for (int step = 0; step < nt; ++step) {
    domain_.laplacian(cur.data(), lap.data());
    lap[src] += source_term(source, step);
    for (int pz = 0; pz < domain_.nz(); ++pz) {
      const std::size_t row = domain_.at(0, pz);
      for (std::size_t i = row; i < row + static_cast<std::size_t>(domain_.nx()); ++i)
        next[i] = k.a[i] * cur[i] - k.b[i] * prev[i] + k.c[i] * lap[i];
    }
    for (std::size_t r = 0; r < nr; ++r) traces[r * nt + step] = next[receivers_[r]];
    if (states && ((step + 1) % stride == 0 || step + 1 == nt)) states->push_back(next);
    if (observer) (*observer)(step, domain_.interior(next));
    std::swap(prev, cur);
    std::swap(cur, next);
  }
}

void WaveSolver::adjoint_one(const std::vector<double>& q, int source, std::span<const double> residual,
                             const ForwardHistory& history, int history_source,
                             std::vector<double>& grad_q) const {
  const std::size_t n = domain_.storage_size();
  const int nt = geometry_.nt;
  const auto k = coefficients(domain_, q, geometry_.dt);
  // lam1 = lambda^{j+1}, lam2 = lambda^{j+2}.
  std::vector<double> lam(n, 0.0), lam1(n, 0.0), lam2(n, 0.0), tmp(n, 0.0), lap(n, 0.0), v(n, 0.0);
  const std::size_t src = sources_[source].cell;
  const std::size_t nr = receivers_.size();
  for (int j = nt; j >= 1; --j) {
    for (std::size_t i = 0; i < n; ++i) tmp[i] = k.c[i] * lam1[i];
    domain_.laplacian(tmp.data(), lap.data());
    for (int pz = 0; pz < domain_.nz(); ++pz) {
      const std::size_t row = domain_.at(0, pz);
      for (std::size_t i = row; i < row + static_cast<std::size_t>(domain_.nx()); ++i)
        lam[i] = k.a[i] * lam1[i] + lap[i] - k.b[i] * lam2[i];
    }
    for (std::size_t r = 0; r < nr; ++r) lam[receivers_[r]] += residual[r * nt + (j - 1)];
    // grad_q += lambda^{n+1} e (L v^n + f^n) with n = j - 1.
    history.state(history_source, j - 1, v);
    domain_.laplacian(v.data(), lap.data());
    lap[src] += source_term(source, j - 1);
    for (std::size_t i = 0; i < n; ++i) grad_q[i] += lam[i] * k.e[i] * lap[i];
    std::swap(lam2, lam1);
    std::swap(lam1, lam);
  }
}

void WaveSolver::born_one(const std::vector<double>& q, const std::vector<double>& dq, int source,
                          const ForwardHistory& history, std::span<double> traces) const {
  const std::size_t n = domain_.storage_size();
  const int nt = geometry_.nt;
  const auto k = coefficients(domain_, q, geometry_.dt);
  std::vector<double> prev(n, 0.0), cur(n, 0.0), next(n, 0.0), lap(n, 0.0), lapv(n, 0.0), v(n, 0.0);
  const std::size_t src = sources_[source].cell;
  const std::size_t nr = receivers_.size();
  for (int step = 0; step < nt; ++step) {
    history.state(source, step, v);
    domain_.laplacian(v.data(), lapv.data());
    lapv[src] += source_term(source, step);
    domain_.laplacian(cur.data(), lap.data());
    for (int pz = 0; pz < domain_.nz(); ++pz) {
      const std::size_t row = domain_.at(0, pz);
      for (std::size_t i = row; i < row + static_cast<std::size_t>(domain_.nx()); ++i)
        next[i] = k.a[i] * cur[i] - k.b[i] * prev[i] + k.c[i] * lap[i] + k.e[i] * dq[i] * lapv[i];
    }
    for (std::size_t r = 0; r < nr; ++r) traces[r * nt + step] = next[receivers_[r]];
    std::swap(prev, cur);
    std::swap(cur, next);
  }
}

Seismogram WaveSolver::forward(std::span<const double> m, ForwardHistory* history) const {
  const auto q = inverse_slowness(m);
  const int ns = geometry_.n_sources();
  Seismogram out(ns, geometry_.n_receivers(), geometry_.nt, geometry_.dt);
  if (history) {
    history->stride = options_.history_stride;
    history->nt = geometry_.nt;
    history->states.assign(ns, {});
  }
  parallel_for(ns, options_.threads, [&](std::size_t s) {
    forward_one(q, static_cast<int>(s), out.source_block(static_cast<int>(s)),
                history ? &history->states[s] : nullptr, nullptr);
  });
  return out;
}

std::vector<double> WaveSolver::adjoint(std::span<const double> m, const Seismogram& residual,
                                        const ForwardHistory& history) const {
  const auto q = inverse_slowness(m);
  const int ns = geometry_.n_sources();
  if (residual.n_sources != ns || residual.n_receivers != geometry_.n_receivers() ||
      residual.nt != geometry_.nt)
    throw ShapeError("residual traces do not match the acquisition geometry");
  if (static_cast<int>(history.states.size()) != ns || history.nt != geometry_.nt)
    throw ShapeError("forward history does not match the acquisition geometry");
  std::vector<std::vector<double>> parts(ns, std::vector<double>(domain_.storage_size(), 0.0));
  parallel_for(ns, options_.threads, [&](std::size_t s) {
    adjoint_one(q, static_cast<int>(s), residual.source_block(static_cast<int>(s)), history,
                static_cast<int>(s), parts[s]);
  });
  std::vector<double> grad_q(domain_.storage_size(), 0.0);
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.size(); ++i) grad_q[i] += p[i];
  for (std::size_t i = 0; i < grad_q.size(); ++i) grad_q[i] *= -q[i] * q[i];
  std::vector<double> grad(grid().size(), 0.0);
  domain_.fold(grad_q, grad);
  return grad;
}

Seismogram WaveSolver::born(std::span<const double> m, std::span<const double> dm,
                            const ForwardHistory& history) const {
  const auto q = inverse_slowness(m);
  if (dm.size() != grid().size()) throw ShapeError("perturbation size does not match grid");
  const int ns = geometry_.n_sources();
  if (static_cast<int>(history.states.size()) != ns || history.nt != geometry_.nt)
    throw ShapeError("forward history does not match the acquisition geometry");
  auto dq = domain_.extend(dm);
  for (std::size_t i = 0; i < dq.size(); ++i) dq[i] *= -q[i] * q[i];
  Seismogram out(ns, geometry_.n_receivers(), geometry_.nt, geometry_.dt);
  parallel_for(ns, options_.threads, [&](std::size_t s) {
    born_one(q, dq, static_cast<int>(s), history, out.source_block(static_cast<int>(s)));
  });
  return out;
}

std::vector<double> WaveSolver::forward_adjoint(std::span<const double> m, const ResidualFn& residual,
                                                Seismogram* predicted) const {
  const auto q = inverse_slowness(m);
  const int ns = geometry_.n_sources();
  const int nr = geometry_.n_receivers();
  const int nt = geometry_.nt;
  Seismogram pred(ns, nr, nt, geometry_.dt);
  std::vector<std::vector<double>> parts(ns);
  parallel_for(ns, options_.threads, [&](std::size_t si) {
    const int s = static_cast<int>(si);
    ForwardHistory h;
    h.stride = options_.history_stride;
    h.nt = nt;
    h.states.resize(1);
    forward_one(q, s, pred.source_block(s), &h.states[0], nullptr);
    std::vector<double> res(static_cast<std::size_t>(nr) * nt, 0.0);
    residual(s, pred.source_block(s), res);
    parts[si].assign(domain_.storage_size(), 0.0);
    adjoint_one(q, s, res, h, 0, parts[si]);
  });
  std::vector<double> grad_q(domain_.storage_size(), 0.0);
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.size(); ++i) grad_q[i] += p[i];
  for (std::size_t i = 0; i < grad_q.size(); ++i) grad_q[i] *= -q[i] * q[i];
  std::vector<double> grad(grid().size(), 0.0);
  domain_.fold(grad_q, grad);
  if (predicted) *predicted = std::move(pred);
  return grad;
}

void WaveSolver::simulate(std::span<const double> m, int source, const StepObserver& observer) const {
  if (source < 0 || source >= geometry_.n_sources()) throw ShapeError("source index out of range");
  const auto q = inverse_slowness(m);
  std::vector<double> traces(static_cast<std::size_t>(geometry_.n_receivers()) * geometry_.nt);
  forward_one(q, source, traces, nullptr, &observer);
}

// ------------------------------------------------------------------ wrappers

namespace {
double model_v_max(const VelocityModel& model) {
  return std::max(model.map.v_max(), model.water_velocity);
}
}  // namespace

Seismogram solve_forward(const VelocityModel& model, const AcquisitionGeometry& geometry,
                         const SolverOptions& options) {
  model.validate();
  WaveSolver solver(model.u.grid, geometry, options, model_v_max(model));
  return solver.forward(model.slowness2());
}

Field2D solve_adjoint(const VelocityModel& model, const AcquisitionGeometry& geometry,
                      const Seismogram& residual, const ForwardHistory& history,
                      const SolverOptions& options) {
  model.validate();
  WaveSolver solver(model.u.grid, geometry, options, model_v_max(model));
  auto g = solver.adjoint(model.slowness2(), residual, history);
  const auto mask = model.u.grid.parameter_mask();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
  return Field2D(model.u.grid, std::move(g));
}

}  // namespace gfwi
