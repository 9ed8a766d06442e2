#include "gibbsfwi/inference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "gibbsfwi/error.hpp"

namespace gfwi {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// ------------------------------------------------------------ problems

LinearGaussianProblem::LinearGaussianProblem(std::size_t dim, std::vector<double> data, double noise_sd,
                                             Operator forward, Operator adjoint)
    : dim_(dim), data_(std::move(data)), forward_(std::move(forward)), adjoint_(std::move(adjoint)) {
  if (!(noise_sd > 0.0)) throw ConfigError("noise sd must be positive");
  precision_ = 1.0 / (noise_sd * noise_sd);
}

LinearGaussianProblem LinearGaussianProblem::dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                                   double noise_sd) {
  if (a.rows() != y.size()) throw ShapeError("linear-Gaussian: A and y disagree");
  auto fwd = [a](std::span<const double> in, std::span<double> out) {
    Eigen::Map<Eigen::VectorXd>(out.data(), a.rows()) =
        a * Eigen::Map<const Eigen::VectorXd>(in.data(), a.cols());
  };
  auto adj = [a](std::span<const double> in, std::span<double> out) {
    Eigen::Map<Eigen::VectorXd>(out.data(), a.cols()) =
        a.transpose() * Eigen::Map<const Eigen::VectorXd>(in.data(), a.rows());
  };
  return LinearGaussianProblem(static_cast<std::size_t>(a.cols()), std::vector<double>(y.data(), y.data() + y.size()),
                               noise_sd, fwd, adj);
}

double LinearGaussianProblem::potential(std::span<const double> xi) const {
  if (xi.size() != dim_) throw ShapeError("linear-Gaussian: wrong dimension");
  std::vector<double> r(data_.size());
  forward_(xi, r);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += (r[i] - data_[i]) * (r[i] - data_[i]);
  return 0.5 * precision_ * s;
}

double LinearGaussianProblem::potential_and_gradient(std::span<const double> xi, std::span<double> grad) const {
  if (xi.size() != dim_ || grad.size() != dim_) throw ShapeError("linear-Gaussian: wrong dimension");
  std::vector<double> r(data_.size());
  forward_(xi, r);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] -= data_[i];
    s += r[i] * r[i];
    r[i] *= precision_;
  }
  adjoint_(r, grad);
  return 0.5 * precision_ * s;
}

LinearMap LinearGaussianProblem::linearize(std::span<const double>) const {
  return [this](std::span<const double> v, std::span<double> out) {
    std::vector<double> r(data_.size());
    forward_(v, r);
    for (double& x : r) x *= precision_;
    adjoint_(r, out);
  };
}

double ZeroPotential::potential_and_gradient(std::span<const double>, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  return 0.0;
}

LinearMap ZeroPotential::linearize(std::span<const double>) const {
  return [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
}

// ----------------------------------------------------------------- MAP

MapResult map_estimate(const PosteriorProblem& problem, std::vector<double> x, const MapOptions& opt) {
  const std::size_t n = problem.dimension();
  if (x.size() != n) throw ShapeError("map_estimate: initial point has the wrong dimension");
  auto evaluate = [&](std::span<const double> at, std::span<double> g, double& phi) {
    phi = problem.potential_and_gradient(at, g);
    for (std::size_t i = 0; i < n; ++i) g[i] += at[i];
    return phi + 0.5 * dot(at, at);
  };

  MapResult res;
  std::vector<double> g(n), gn(n), xn(n), d(n);
  double phi = 0.0, phin = 0.0;
  double f = evaluate(x, g, phi);
  if (!std::isfinite(f) || !finite(g)) throw NumericError("map_estimate: objective not finite at the initial point");
  res.initial_gradient_norm = norm(g);
  res.history.push_back(f);
  std::deque<std::vector<double>> ss, ys;
  std::deque<double> rhos;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const double gnorm = norm(g);
    if (gnorm <= opt.gradient_tolerance * res.initial_gradient_norm || gnorm == 0.0) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    d = g;
    std::vector<double> alpha(ss.size());
    for (std::size_t k = ss.size(); k-- > 0;) {
      alpha[k] = rhos[k] * dot(ss[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * ys[k][i];
    }
    if (!ss.empty()) {
      const double gamma = dot(ss.back(), ys.back()) / dot(ys.back(), ys.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < ss.size(); ++k) {
      const double beta = rhos[k] * dot(ys[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * ss[k][i];
    }
    for (double& v : d) v = -v;

    bool accepted = false;
    bool stalled = false;
    bool approx = false;
    double fnew = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1 || dot(g, d) >= 0.0) {
        if (attempt == 1 && ss.empty()) break;
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        ss.clear();
        ys.clear();
        rhos.clear();
      }
      const double slope = dot(g, d);
      double t = ss.empty() ? std::min(1.0, 1.0 / norm(d)) : 1.0;
      for (int b = 0; b < opt.max_backtracks; ++b, t *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + t * d[i];
        const double fn = evaluate(xn, gn, phin);
        if (std::isfinite(fn) && finite(gn)) {
          // Approximate Wolfe test (Hager-Zhang) once decreases drop below roundoff.
          const double dslope = dot(gn, d);
          approx = fn <= f && dslope <= -0.8 * slope && dslope >= 0.9 * slope;
          if (fn <= f + opt.armijo * t * slope || approx) {
            accepted = true;
            fnew = fn;
            break;
          }
          if (std::abs(fn - f) <= 1e-14 * std::max(1.0, std::abs(f))) stalled = true;
        }
      }
    }
    if (!accepted) {
      if (stalled) break;
      std::ostringstream os;
      os << "map_estimate: line search failed at iteration " << it << " (objective " << f << ", gradient norm "
         << gnorm << ", initial gradient norm " << res.initial_gradient_norm << ")";
      throw OptimizationError(os.str());
    }
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * dot(s, s)) {
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(ss.size()) > opt.memory) {
        ss.pop_front();
        ys.pop_front();
        rhos.pop_front();
      }
    }
    const double fprev = f;
    x.swap(xn);
    g.swap(gn);
    f = fnew;
    phi = phin;
    res.history.push_back(f);
    if (!approx && fprev - f <= opt.objective_tolerance * std::max(1.0, std::abs(fprev))) {
      ++it;
      res.converged = norm(g) <= opt.gradient_tolerance * res.initial_gradient_norm;
      break;
    }
  }
  res.iterations = it;
  res.objective = f;
  res.potential = phi;
  res.gradient_norm = norm(g);
  if (!res.converged) res.converged = res.gradient_norm <= opt.gradient_tolerance * res.initial_gradient_norm;
  res.xi = std::move(x);
  return res;
}

// -------------------------------------------------------------- Laplace

Eigen::VectorXd GaussianApprox::shrinkage() const {
  return eigenvalues.array() / (1.0 + eigenvalues.array());
}

void GaussianApprox::apply_covariance(std::span<const double> v, std::span<double> out) const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::Map<const Eigen::VectorXd> vv(v.data(), n);
  Eigen::Map<Eigen::VectorXd> o(out.data(), n);
  const Eigen::VectorXd c = shrinkage().asDiagonal() * (eigenvectors.transpose() * vv);
  o = vv - eigenvectors * c;
}

void GaussianApprox::apply_sqrt_covariance(std::span<const double> v, std::span<double> out) const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::Map<const Eigen::VectorXd> vv(v.data(), n);
  Eigen::Map<Eigen::VectorXd> o(out.data(), n);
  const Eigen::VectorXd f = 1.0 - (1.0 + eigenvalues.array()).rsqrt();
  const Eigen::VectorXd c = f.asDiagonal() * (eigenvectors.transpose() * vv);
  o = vv - eigenvectors * c;
}

Eigen::MatrixXd GaussianApprox::dense_covariance() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  return Eigen::MatrixXd::Identity(n, n) - eigenvectors * shrinkage().asDiagonal() * eigenvectors.transpose();
}

std::vector<double> GaussianApprox::variance() const {
  const Eigen::VectorXd d = shrinkage();
  std::vector<double> v(dimension(), 1.0);
  for (Eigen::Index i = 0; i < eigenvectors.rows(); ++i)
    for (Eigen::Index k = 0; k < eigenvectors.cols(); ++k) v[i] -= d[k] * eigenvectors(i, k) * eigenvectors(i, k);
  return v;
}

std::vector<double> GaussianApprox::sample(Rng& rng) const {
  const auto z = standard_normal(dimension(), rng);
  std::vector<double> out(dimension());
  apply_sqrt_covariance(z, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += mean[i];
  return out;
}

namespace {

Eigen::MatrixXd apply_columns(const LinearMap& h, const Eigen::MatrixXd& in) {
  Eigen::MatrixXd out(in.rows(), in.cols());
  std::vector<double> col(in.rows()), res(in.rows());
  for (Eigen::Index j = 0; j < in.cols(); ++j) {
    Eigen::Map<Eigen::VectorXd>(col.data(), in.rows()) = in.col(j);
    h(col, res);
    out.col(j) = Eigen::Map<const Eigen::VectorXd>(res.data(), in.rows());
  }
  return out;
}

}  // namespace

GaussianApprox laplace(const PosteriorProblem& problem, std::span<const double> xi_map, const LaplaceOptions& opt) {
  const std::size_t n = problem.dimension();
  if (xi_map.size() != n) throw ShapeError("laplace: MAP point has the wrong dimension");
  if (opt.max_rank < 0 || opt.oversampling < 0) throw ConfigError("laplace: rank options must be >= 0");
  const LinearMap h = problem.linearize(xi_map);
  const auto dim = static_cast<Eigen::Index>(n);

  Eigen::MatrixXd basis;
  Eigen::MatrixXd small;
  if (n <= opt.exact_dimension) {
    basis = Eigen::MatrixXd::Identity(dim, dim);
    small = apply_columns(h, basis);
  } else {
    const Eigen::Index l = std::min<Eigen::Index>(dim, opt.max_rank + opt.oversampling);
    Rng rng(opt.seed);
    Eigen::MatrixXd omega(dim, l);
    const auto z = standard_normal(static_cast<std::size_t>(dim * l), rng);
    for (Eigen::Index j = 0; j < l; ++j)
      for (Eigen::Index i = 0; i < dim; ++i) omega(i, j) = z[static_cast<std::size_t>(j * dim + i)];
    const Eigen::MatrixXd y = apply_columns(h, omega);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(dim, l);
    small = basis.transpose() * apply_columns(h, basis);
  }
  const Eigen::MatrixXd sym = 0.5 * (small + small.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw LinearAlgebraError("laplace: eigen-decomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();  // ascending
  if (vals.size() > 0 && vals(0) <= -1.0)
    throw LinearAlgebraError("laplace: Hessian eigenvalue <= -1, posterior covariance is indefinite");
  const double top = vals.size() ? vals(vals.size() - 1) : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = vals.size(); i-- > 0;) {
    if (static_cast<int>(keep.size()) >= opt.max_rank) break;
    if (!(vals(i) > 0.0) || vals(i) < opt.relative_cutoff * top) break;
    keep.push_back(i);
  }
  GaussianApprox g;
  g.mean.assign(xi_map.begin(), xi_map.end());
  g.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
  g.eigenvectors.resize(dim, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    g.eigenvalues(static_cast<Eigen::Index>(k)) = vals(keep[k]);
    g.eigenvectors.col(static_cast<Eigen::Index>(k)) = basis * eig.eigenvectors().col(keep[k]);
  }
  return g;
}

// ------------------------------------------------------------------ pCN

ChainState make_chain_state(const PosteriorProblem& problem, std::vector<double> xi, double step,
                            std::uint64_t seed) {
  if (xi.size() != problem.dimension()) throw ShapeError("chain: initial state has the wrong dimension");
  if (!(step >= 0.0 && step <= 1.0)) throw ConfigError("pCN step must lie in [0, 1]");
  ChainState s;
  s.potential = problem.potential(xi);
  if (!std::isfinite(s.potential)) throw NumericError("chain: potential not finite at the initial state");
  s.xi = std::move(xi);
  s.step = step;
  s.rng.seed(seed);
  return s;
}

void pcn_step(ChainState& state, const PosteriorProblem& problem) {
  const std::size_t n = state.xi.size();
  const double b = state.step;
  const double a = std::sqrt(std::max(0.0, 1.0 - b * b));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> prop(n);
  for (std::size_t i = 0; i < n; ++i) prop[i] = a * state.xi[i] + b * normal(state.rng);
  const double u = uniform(state.rng);
  ++state.proposed;
  const double phi = problem.potential(prop);
  state.rejected_nonfinite = !std::isfinite(phi);
  if (state.rejected_nonfinite) return;
  const double log_alpha = state.potential - phi;
  if (log_alpha >= 0.0 || u < std::exp(log_alpha)) {
    state.xi.swap(prop);
    state.potential = phi;
    ++state.accepted;
  }
}

ChainSummary run_chain(const PosteriorProblem& problem, std::vector<double> init, const ChainOptions& opt) {
  if (opt.thin == 0) throw ConfigError("chain thinning must be >= 1");
  if (opt.steps > 0 && opt.burn_in >= opt.steps) throw ConfigError("burn-in must be shorter than the chain");
  ChainState st = make_chain_state(problem, std::move(init), opt.step, opt.seed);
  const std::size_t n = st.xi.size();
  ChainSummary sum;
  sum.mean.assign(n, 0.0);
  sum.variance.assign(n, 0.0);
  std::vector<double> m2(n, 0.0);
  std::uint64_t window_acc = 0, window_n = 0;
  for (std::uint64_t it = 0; it < opt.steps; ++it) {
    const auto before = st.accepted;
    pcn_step(st, problem);
    const bool acc = st.accepted != before;
    if (st.rejected_nonfinite) ++sum.nonfinite_rejections;
    if (it < opt.burn_in) {
      if (opt.adapt) {
        window_acc += acc;
        ++window_n;
        if (window_n == opt.adapt_interval) {
          const double rate = static_cast<double>(window_acc) / static_cast<double>(window_n);
          st.step = std::clamp(st.step * std::exp(rate - opt.target_acceptance), 1e-4, 1.0);
          window_acc = window_n = 0;
        }
      }
      continue;
    }
    ++sum.total;
    sum.accepted += acc;
    const double k = static_cast<double>(sum.total);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = st.xi[i] - sum.mean[i];
      sum.mean[i] += d / k;
      m2[i] += d * (st.xi[i] - sum.mean[i]);
    }
    if ((it - opt.burn_in) % opt.thin == 0) {
      sum.samples.push_back(st.xi);
      sum.potentials.push_back(st.potential);
    }
  }
  sum.final_step = st.step;
  if (sum.total == 0) {
    sum.initial_only = true;
    sum.mean = st.xi;
    sum.samples.push_back(st.xi);
    sum.potentials.push_back(st.potential);
    return sum;
  }
  sum.acceptance_rate = static_cast<double>(sum.accepted) / static_cast<double>(sum.total);
  if (sum.total > 1)
    for (std::size_t i = 0; i < n; ++i) sum.variance[i] = m2[i] / static_cast<double>(sum.total - 1);
  return sum;
}

}  // namespace gfwi
