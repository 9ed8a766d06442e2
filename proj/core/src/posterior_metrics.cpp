#include "gibbsfwi/posterior_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include "json.hpp"
#include <numeric>
#include <sstream>

#include "gibbsfwi/error.hpp"
#include "gibbsfwi/parallel.hpp"

namespace gfwi {

namespace {

void check_pair(const DenseGaussian& a, const DenseGaussian& b) {
  const auto n = a.mean.size();
  if (b.mean.size() != n) throw ShapeError("Gaussian pair: dimensions differ");
  for (const DenseGaussian* g : {&a, &b}) {
    if (g->cov.rows() != n || g->cov.cols() != n) throw ShapeError("Gaussian pair: covariance shape mismatch");
    if (!g->mean.allFinite() || !g->cov.allFinite()) throw LinearAlgebraError("Gaussian pair: non-finite entries");
    if (n == 0) continue;
    const double scale = std::max(1.0, g->cov.cwiseAbs().maxCoeff());
    if ((g->cov - g->cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw LinearAlgebraError("covariance is not symmetric");
  }
  if (static_cast<std::size_t>(n) > kDenseMetricLimit)
    throw PreconditionError("dense Gaussian metrics are limited to dimension " + std::to_string(kDenseMetricLimit));
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& s) { return 0.5 * (s + s.transpose()); }

/// Symmetric PSD square root; throws on clearly negative eigenvalues.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(s));
  if (es.info() != Eigen::Success) throw LinearAlgebraError("eigendecomposition failed");
  const Eigen::VectorXd& l = es.eigenvalues();
  if (l.size() == 0) return s;
  const double top = std::max(std::abs(l.maxCoeff()), std::abs(l.minCoeff()));
  const double tol = 1e-10 * std::max(top, std::numeric_limits<double>::min()) * std::sqrt(double(l.size()));
  if (l.minCoeff() < -tol) throw LinearAlgebraError("covariance is not positive semi-definite");
  const Eigen::VectorXd r = l.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
}

template <class Vec>
int lex_compare(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return -1;
    if (b[i] < a[i]) return 1;
  }
  return 0;
}

// Canonical argument order so that the non-symmetric formulas give
// bitwise-identical results for (a, b) and (b, a).
bool swapped(const DenseGaussian& a, const DenseGaussian& b) {
  int c = lex_compare(a.mean, b.mean);
  if (c == 0) c = lex_compare(a.cov.reshaped(), b.cov.reshaped());
  return c > 0;
}

bool swapped(const GaussianApprox& a, const GaussianApprox& b) {
  int c = lex_compare(Eigen::Map<const Eigen::VectorXd>(a.mean.data(), Eigen::Index(a.mean.size())),
                      Eigen::Map<const Eigen::VectorXd>(b.mean.data(), Eigen::Index(b.mean.size())));
  if (c == 0 && a.rank() != b.rank()) return a.rank() > b.rank();
  if (c == 0) c = lex_compare(a.eigenvalues, b.eigenvalues);
  if (c == 0) c = lex_compare(a.eigenvectors.reshaped(), b.eigenvectors.reshaped());
  return c > 0;
}

double log_det_spd(const Eigen::MatrixXd& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(s));
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("covariance is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

// ------------------------------------------------------------- dense

bool covariances_commute(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  const Eigen::MatrixXd ab = a * b;
  const double c = (ab - ab.transpose()).norm();  // b a = (a b)^T for symmetric a, b
  return c <= tol * a.norm() * b.norm();
}

double gaussian_w2_squared_general(const DenseGaussian& a0, const DenseGaussian& b0) {
  check_pair(a0, b0);
  if (a0.dimension() == 0) return 0.0;
  const bool sw = swapped(a0, b0);
  const DenseGaussian& a = sw ? b0 : a0;
  const DenseGaussian& b = sw ? a0 : b0;
  sqrt_psd(b.cov);  // PSD check of the second argument
  const Eigen::MatrixXd ra = sqrt_psd(a.cov);
  const Eigen::MatrixXd m = symmetrized(ra * b.cov * ra);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw LinearAlgebraError("eigendecomposition failed");
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double tr = a.cov.trace() + b.cov.trace() - 2.0 * cross;
  return (a.mean - b.mean).squaredNorm() + std::max(tr, 0.0);
}

double gaussian_w2_squared_commuting(const DenseGaussian& a, const DenseGaussian& b) {
  check_pair(a, b);
  if (a.dimension() == 0) return 0.0;
  return (a.mean - b.mean).squaredNorm() + (sqrt_psd(a.cov) - sqrt_psd(b.cov)).squaredNorm();
}

double gaussian_w2(const DenseGaussian& a, const DenseGaussian& b) {
  check_pair(a, b);
  if (a.dimension() == 0) return 0.0;
  const double d2 = covariances_commute(a.cov, b.cov) ? gaussian_w2_squared_commuting(a, b)
                                                      : gaussian_w2_squared_general(a, b);
  return std::sqrt(std::max(d2, 0.0));
}

double gaussian_hellinger_squared(const DenseGaussian& a, const DenseGaussian& b) {
  check_pair(a, b);
  if (a.dimension() == 0) return 0.0;
  const Eigen::MatrixXd avg = 0.5 * (a.cov + b.cov);
  const double la = log_det_spd(a.cov);
  const double lb = log_det_spd(b.cov);
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(avg));
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("covariance is not positive definite");
  const double lavg = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::VectorXd dm = a.mean - b.mean;
  const double quad = dm.dot(llt.solve(dm));
  const double log_bc = 0.25 * (la + lb) - 0.5 * lavg - 0.125 * quad;
  return std::clamp(-std::expm1(std::min(log_bc, 0.0)), 0.0, 1.0);
}

double gaussian_hellinger(const DenseGaussian& a, const DenseGaussian& b) {
  return std::sqrt(gaussian_hellinger_squared(a, b));
}

// ---------------------------------------------------------- low rank

DenseGaussian to_dense(const GaussianApprox& g) {
  DenseGaussian d;
  d.mean = Eigen::Map<const Eigen::VectorXd>(g.mean.data(), Eigen::Index(g.mean.size()));
  d.cov = g.dense_covariance();
  return d;
}

DenseGaussian pushforward_to_grid(const GaussianApprox& g, const MaternField& prior) {
  if (g.dimension() != prior.latent_size()) throw ShapeError("approximation does not match the prior");
  const auto n = static_cast<Eigen::Index>(prior.grid().size());
  DenseGaussian out;
  const auto mean = prior.field(g.mean);
  out.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
  Eigen::MatrixXd wv(n, g.rank());
  std::vector<double> col(g.dimension());
  for (int k = 0; k < g.rank(); ++k) {
    Eigen::Map<Eigen::VectorXd>(col.data(), Eigen::Index(col.size())) = g.eigenvectors.col(k);
    const auto w = prior.window(col);
    wv.col(k) = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
  }
  out.cov = prior.window_covariance() - wv * g.shrinkage().asDiagonal() * wv.transpose();
  out.cov = symmetrized(out.cov);
  return out;
}

namespace {

struct Reduced {
  DenseGaussian a, b;
  double mean_distance2 = 0.0;
  bool ok = false;
};

Reduced reduce(const GaussianApprox& a, const GaussianApprox& b) {
  const auto n = static_cast<Eigen::Index>(a.dimension());
  if (b.dimension() != a.dimension()) throw ShapeError("Gaussian pair: dimensions differ");
  for (const GaussianApprox* g : {&a, &b}) {
    if (g->eigenvectors.rows() != n || g->eigenvectors.cols() != g->rank())
      throw ShapeError("low-rank factor has the wrong shape");
    if ((g->eigenvalues.array() <= -1.0).any()) throw LinearAlgebraError("low-rank update is not positive definite");
  }
  const Eigen::VectorXd dm = Eigen::Map<const Eigen::VectorXd>(a.mean.data(), n) -
                             Eigen::Map<const Eigen::VectorXd>(b.mean.data(), n);
  Eigen::MatrixXd stack(n, a.rank() + b.rank() + 1);
  stack << a.eigenvectors, b.eigenvectors, dm;
  Reduced r;
  r.mean_distance2 = dm.squaredNorm();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stack);
  qr.setThreshold(1e-12);
  const Eigen::Index k = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  const Eigen::MatrixXd proj = q.transpose() * stack;
  const double resid = (stack - q * proj).norm();
  r.ok = resid <= 1e-8 * std::max(1.0, stack.norm());
  const auto restricted = [&](const GaussianApprox& g) {
    const Eigen::MatrixXd w = q.transpose() * g.eigenvectors;
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(k, k) - w * g.shrinkage().asDiagonal() * w.transpose());
  };
  r.a.cov = symmetrized(restricted(a));
  r.b.cov = symmetrized(restricted(b));
  r.a.mean = q.transpose() * dm;
  r.b.mean = Eigen::VectorXd::Zero(k);
  return r;
}

}  // namespace

double gaussian_w2(const GaussianApprox& a0, const GaussianApprox& b0) {
  const bool sw = swapped(a0, b0);
  const GaussianApprox& a = sw ? b0 : a0;
  const GaussianApprox& b = sw ? a0 : b0;
  Reduced r = reduce(a, b);
  if (!r.ok) {
    if (a.dimension() > kDenseMetricLimit) throw LinearAlgebraError("low-rank reduction failed its basis check");
    return gaussian_w2(to_dense(a), to_dense(b));
  }
  r.a.mean.setZero();
  const double d2 = r.mean_distance2 + gaussian_w2_squared_general(r.a, r.b);
  return std::sqrt(std::max(d2, 0.0));
}

double gaussian_hellinger_squared(const GaussianApprox& a0, const GaussianApprox& b0) {
  const bool sw = swapped(a0, b0);
  const GaussianApprox& a = sw ? b0 : a0;
  const GaussianApprox& b = sw ? a0 : b0;
  const Reduced r = reduce(a, b);
  if (!r.ok) {
    if (a.dimension() > kDenseMetricLimit) throw LinearAlgebraError("low-rank reduction failed its basis check");
    return gaussian_hellinger_squared(to_dense(a), to_dense(b));
  }
  return gaussian_hellinger_squared(r.a, r.b);
}

double gaussian_hellinger(const GaussianApprox& a, const GaussianApprox& b) {
  return std::sqrt(gaussian_hellinger_squared(a, b));
}

// ------------------------------------------------- Hellinger by sampling

HellingerEstimate hellinger_is(const PotentialFn& phi, const PotentialFn& phi2, const PriorDraw& prior_draw,
                               std::size_t n, Rng& rng, int bootstrap, int threads) {
  if (n == 0) throw PreconditionError("hellinger_is needs at least one sample");
  std::vector<std::vector<double>> draws(n);
  for (auto& d : draws) d = prior_draw(rng);
  std::vector<double> a(n), b(n);
  parallel_for(n, threads, [&](std::size_t i) {
    a[i] = phi(draws[i]);
    b[i] = phi2(draws[i]);
  });
  const double inf = std::numeric_limits<double>::infinity();
  for (auto* v : {&a, &b})
    for (double& x : *v)
      if (std::isnan(x)) x = inf;
  const double sa = *std::min_element(a.begin(), a.end());
  const double sb = *std::min_element(b.begin(), b.end());
  if (!std::isfinite(sa) || !std::isfinite(sb)) throw NumericError("hellinger_is: every potential is infinite");

  std::vector<double> w(n), w2(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - sa, db = b[i] - sb;
    w[i] = std::exp(-da);
    w2[i] = std::exp(-db);
    c[i] = std::exp(-(da + db) / 2.0);
  }
  const auto estimate = [&](const auto& index) {
    double sw = 0.0, sw2 = 0.0, sc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = index(k);
      sw += w[i];
      sw2 += w2[i];
      sc += c[i];
    }
    return std::clamp(1.0 - sc / std::sqrt(sw * sw2), 0.0, 1.0);
  };
  HellingerEstimate out;
  out.value = estimate([](std::size_t k) { return k; });
  const auto ess = [&](const std::vector<double>& v) {
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
      s += x;
      s2 += x * x;
    }
    return s * s / s2;
  };
  out.effective_sample_size = std::min(ess(w), ess(w2));
  out.unreliable = out.effective_sample_size < 10.0;
  if (bootstrap > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < bootstrap; ++r) {
      for (auto& i : idx) i = pick(rng);
      const double e = estimate([&](std::size_t k) { return idx[k]; });
      const double delta = e - mean;
      mean += delta / (r + 1);
      m2 += delta * (e - mean);
    }
    out.standard_error = std::sqrt(m2 / (bootstrap - 1));
  }
  return out;
}

// ---------------------------------------------------------------- noise

namespace {

double squared_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

NoisyData apply_noise(const Seismogram& y, const std::vector<double>& unit, double amplitude) {
  NoisyData out;
  out.amplitude = amplitude;
  out.eta0.resize(unit.size());
  for (std::size_t t = 0; t < unit.size(); ++t) out.eta0[t] = amplitude * unit[t];
  out.data = y;
  const double ymax = y.max_abs();
  double noise2 = 0.0;
  for (std::size_t tr = 0; tr < y.trace_count(); ++tr) {
    const auto src = y.trace(tr);
    const auto dst = out.data.trace(tr);
    for (std::size_t t = 0; t < src.size(); ++t) {
      const double eta = (1.0 + (ymax > 0.0 ? src[t] / ymax : 0.0)) * out.eta0[t];
      dst[t] = src[t] + eta;
      noise2 += eta * eta;
    }
  }
  out.data.zero_mean = y.zero_mean && amplitude == 0.0;
  out.snr_db = 10.0 * std::log10(squared_sum(y.data) / noise2);
  return out;
}

}  // namespace

NoisyData make_noise(const Seismogram& y, Rng& rng, double amplitude) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ConfigError("noise amplitude must be >= 0");
  if (!y.all_finite()) throw PreconditionError("make_noise: data are not finite");
  return apply_noise(y, standard_normal(static_cast<std::size_t>(y.nt), rng), amplitude);
}

NoisyData make_noise_snr(const Seismogram& y, Rng& rng, double target_db) {
  if (!std::isfinite(target_db)) throw ConfigError("target SNR must be finite");
  if (!y.all_finite()) throw PreconditionError("make_noise: data are not finite");
  const auto unit = standard_normal(static_cast<std::size_t>(y.nt), rng);
  const double signal = squared_sum(y.data);
  if (!(signal > 0.0)) throw PreconditionError("make_noise_snr: data are identically zero");
  // |eta|^2 is exactly quadratic in the amplitude for fixed draws.
  const NoisyData unit_noise = apply_noise(y, unit, 1.0);
  double k = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double e = unit_noise.data.data[i] - y.data[i];
    k += e * e;
  }
  if (!(k > 0.0)) throw NumericError("make_noise_snr: degenerate noise draw");
  return apply_noise(y, unit, std::sqrt(signal / (k * std::pow(10.0, target_db / 10.0))));
}

double snr_db(const Seismogram& y, const Seismogram& noisy) {
  if (!y.same_shape(noisy)) throw ShapeError("snr_db: shapes differ");
  double s = 0.0, e = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    s += y.data[i] * y.data[i];
    const double d = noisy.data[i] - y.data[i];
    e += d * d;
  }
  return 10.0 * std::log10(s / e);
}

// ------------------------------------------------------ stability report

std::optional<double> reference_distance(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::L2: return 9.34;
    case PotentialKind::Hm1: return 2.83;
    case PotentialKind::W2: return 6.60;
    default: return std::nullopt;
  }
}

const StabilityEntry* StabilityReport::find(PotentialKind kind) const {
  for (const auto& e : entries)
    if (e.kind == kind) return &e;
  return nullptr;
}

std::optional<bool> StabilityReport::ordering_holds() const {
  const auto* l2 = find(PotentialKind::L2);
  const auto* w2 = find(PotentialKind::W2);
  const auto* hm = find(PotentialKind::Hm1);
  if (!l2 || !w2 || !hm || !l2->distance_w2 || !w2->distance_w2 || !hm->distance_w2) return std::nullopt;
  return *l2->distance_w2 > *w2->distance_w2 && *w2->distance_w2 > *hm->distance_w2;
}

namespace {

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string StabilityReport::to_json() const {
  using nlohmann::json;
  json g = {{"nx", grid.nx}, {"nz", grid.nz}, {"dx", grid.dx}, {"dz", grid.dz},
            {"x0", grid.x0}, {"z0", grid.z0}, {"water_depth", grid.water_depth}};
  json rows = json::array();
  for (const auto& e : entries) {
    rows.push_back({{"potential", to_string(e.kind)},
                    {"distance_w2", e.distance_w2 ? json(*e.distance_w2) : json(nullptr)},
                    {"reference", e.reference ? json(*e.reference) : json(nullptr)},
                    {"norm_l2", norm_l2},
                    {"norm_hm1", norm_hm1},
                    {"snr_db", finite_or_null(snr_db)},
                    {"grid", g},
                    {"seed", seed}});
  }
  const auto order = ordering_holds();
  json out = {{"rows", rows}, {"ordering_holds", order ? json(*order) : json(nullptr)}};
  return out.dump(2) + "\n";
}

std::string StabilityReport::to_csv() const {
  std::ostringstream os;
  os << "potential,distance_w2,reference,norm_l2,norm_hm1,snr_db,nx,nz,seed\n";
  for (const auto& e : entries) {
    os << to_string(e.kind) << ',' << (e.distance_w2 ? fmt(*e.distance_w2) : "") << ','
       << (e.reference ? fmt(*e.reference) : "") << ',' << fmt(norm_l2) << ',' << fmt(norm_hm1) << ','
       << fmt(snr_db) << ',' << grid.nx << ',' << grid.nz << ',' << seed << '\n';
  }
  return os.str();
}

StabilityReport stability_report(const std::vector<StabilityInput>& runs, const Seismogram& y,
                                 const Seismogram& y_noisy, const Grid2D& grid, double snr, std::uint64_t seed) {
  if (!y.same_shape(y_noisy)) throw ShapeError("stability_report: datasets differ in shape");
  StabilityReport rep;
  rep.grid = grid;
  rep.seed = seed;
  rep.snr_db = snr;
  Seismogram diff = y_noisy;
  for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] -= y.data[i];
  remove_zero_frequency_inplace(diff);
  rep.norm_l2 = seismogram_l2_norm(diff);
  rep.norm_hm1 = seismogram_hm1_norm(diff);
  for (const auto& run : runs) {
    StabilityEntry e;
    e.kind = run.kind;
    e.reference = reference_distance(run.kind);
    if (run.clean && run.noisy) e.distance_w2 = gaussian_w2(*run.clean, *run.noisy);
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace gfwi
