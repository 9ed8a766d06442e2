#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "gibbsfwi/error.hpp"
#include "gibbsfwi/priors.hpp"
#include "support/scenes.hpp"

using namespace gfwi;
using testing_support::dot;
using testing_support::random_vector;

namespace {

Grid2D square(int n, double h) {
  Grid2D g;
  g.nx = g.nz = n;
  g.dx = g.dz = h;
  return g;
}

double matern(double r, double sigma, double nu, double ell) {
  if (r == 0.0) return sigma * sigma;
  const double x = r / ell;
  return sigma * sigma * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

struct Moments {
  double mean = 0.0, se = 0.0;
};

Moments moments(const std::vector<double>& z) {
  Moments m;
  for (double x : z) m.mean += x;
  m.mean /= z.size();
  double v = 0.0;
  for (double x : z) v += (x - m.mean) * (x - m.mean);
  m.se = std::sqrt(v / (z.size() - 1) / z.size());
  return m;
}

}  // namespace

TEST(Matern, ZeroAmplitudeGivesMean) {
  const auto g = square(16, 0.1);
  MaternSpec spec;
  spec.sigma = 0.0;
  spec.mean_value = 2.5;
  Rng rng(1);
  for (double x : sample_matern(spec, g, rng)) EXPECT_EQ(x, 2.5);
}

TEST(Matern, CovarianceMatchesBesselForm) {
  const auto g = square(64, 0.01);
  for (double nu : {0.5, 1.0, 3.0}) {
    MaternSpec spec;
    spec.sigma = 0.7;
    spec.nu = nu;
    spec.ell = 0.08;
    const MaternField f(g, spec);
    // spectral mass beyond the grid Nyquist disc: (1 + (pi ell / h)^2)^-nu
    const double tail = std::pow(1.0 + std::pow(std::numbers::pi * 0.08 / 0.01, 2), -nu);
    for (int lag : {0, 4, 8, 16}) {
      const double ref = matern(lag * 0.01, 0.7, nu, 0.08);
      EXPECT_NEAR(f.covariance(lag, 0), ref, 0.49 * (tail + 1e-3)) << "nu " << nu << " lag " << lag;
    }
  }
}

TEST(Matern, PointwiseVarianceMonteCarlo) {
  const auto g = square(32, 0.02);
  MaternSpec spec;
  spec.ell = 0.08;
  const MaternField f(g, spec);
  Rng rng(2);
  const int n = 2000;
  const int pts[5][2] = {{8, 8}, {16, 16}, {24, 8}, {8, 24}, {20, 12}};
  std::vector<std::vector<double>> sq(5);
  for (int k = 0; k < n; ++k) {
    const auto u = f.sample(rng);
    for (int p = 0; p < 5; ++p) {
      const double x = u[g.index(pts[p][0], pts[p][1])];
      sq[p].push_back(x * x);
    }
  }
  for (int p = 0; p < 5; ++p) {
    const auto m = moments(sq[p]);
    EXPECT_NEAR(m.mean, 0.49, 3 * m.se) << "point " << p;
  }
}

TEST(Matern, ExponentialCovarianceAtOneLengthScale) {
  const auto g = square(64, 0.01);
  MaternSpec spec;
  spec.nu = 0.5;
  spec.sigma = 1.0;
  spec.ell = 0.1;
  const MaternField f(g, spec);
  Rng rng(3);
  std::vector<double> z;
  for (int k = 0; k < 2000; ++k) {
    const auto u = f.sample(rng);
    double s = 0.0;
    int c = 0;
    for (int iz = 10; iz < 54; iz += 11)
      for (int ix = 5; ix + 10 < 64; ix += 13, ++c) s += u[g.index(ix, iz)] * u[g.index(ix + 10, iz)];
    z.push_back(s / c);
  }
  const auto m = moments(z);
  EXPECT_NEAR(m.mean, std::exp(-1.0), 3 * m.se);
}

TEST(Matern, Stationarity) {
  const auto g = square(40, 0.02);
  MaternSpec spec;
  spec.ell = 0.06;
  const MaternField f(g, spec);
  Rng rng(4);
  for (int lag : {2, 5}) {
    std::vector<double> a, b;
    for (int k = 0; k < 2000; ++k) {
      const auto u = f.sample(rng);
      a.push_back(u[g.index(5, 10)] * u[g.index(5 + lag, 10)]);
      b.push_back(u[g.index(20, 30)] * u[g.index(20, 30 + lag)]);
    }
    const auto ma = moments(a), mb = moments(b);
    EXPECT_NEAR(ma.mean, mb.mean, 3 * std::hypot(ma.se, mb.se)) << "lag " << lag;
  }
}

TEST(Matern, SmoothDrawsStableUnderRefinement) {
  MaternSpec spec;
  spec.nu = 3.0;
  spec.ell = 0.1;
  const auto lap_max = [&](int n, double h) {
    const auto g = square(n, h);
    const MaternField f(g, spec);
    Rng rng(5);
    double acc = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto u = f.sample(rng);
      double mx = 0.0;
      for (int iz = 1; iz + 1 < n; ++iz)
        for (int ix = 1; ix + 1 < n; ++ix) {
          const double l = (u[g.index(ix + 1, iz)] + u[g.index(ix - 1, iz)] + u[g.index(ix, iz + 1)] +
                            u[g.index(ix, iz - 1)] - 4 * u[g.index(ix, iz)]) /
                           (h * h);
          mx = std::max(mx, std::abs(l));
        }
      acc += mx;
    }
    return acc / 20;
  };
  const double coarse = lap_max(32, 0.04), fine = lap_max(64, 0.02);
  EXPECT_TRUE(std::isfinite(coarse));
  EXPECT_LT(fine / coarse, 2.0);
  EXPECT_GT(fine / coarse, 0.5);
}

TEST(Matern, WhitenRoundTrip) {
  const auto g = square(20, 0.05);
  MaternSpec spec;
  spec.ell = 0.1;
  const MaternField f(g, spec);
  const std::vector<double> zero(f.latent_size(), 0.0);
  for (double x : f.unwhiten(zero)) EXPECT_EQ(x, 0.0);
  for (double x : f.whiten(zero)) EXPECT_EQ(x, 0.0);
  Rng rng(6);
  const auto padded = f.unwhiten(f.sample_latent(rng));
  const auto back = f.unwhiten(f.whiten(padded));
  for (std::size_t i = 0; i < padded.size(); ++i) EXPECT_NEAR(back[i], padded[i], 1e-10);
}

TEST(Matern, WhitenedDrawsHaveUnitVariance) {
  const auto g = square(12, 0.05);
  MaternSpec spec;
  spec.ell = 0.1;
  const MaternField f(g, spec);
  Rng rng(7);
  const int n = 2000;
  std::vector<std::vector<double>> sq(4);
  const std::size_t coords[4] = {0, 17, f.latent_size() / 2, f.latent_size() - 1};
  for (int k = 0; k < n; ++k) {
    // a padded prior draw built independently of the whitening basis: sum of
    // two half-variance draws
    auto a = f.unwhiten(f.sample_latent(rng));
    const auto b = f.unwhiten(f.sample_latent(rng));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = (a[i] + b[i]) / std::sqrt(2.0);
    const auto xi = f.whiten(a);
    for (int c = 0; c < 4; ++c) sq[c].push_back(xi[coords[c]] * xi[coords[c]]);
  }
  for (int c = 0; c < 4; ++c) {
    const auto m = moments(sq[c]);
    EXPECT_NEAR(m.mean, 1.0, 3 * m.se);
  }
}

TEST(Matern, PullbackIsAdjointOfWindow) {
  Grid2D g;
  g.nx = 24;
  g.nz = 12;
  g.dx = g.dz = 0.05;
  MaternSpec spec;
  spec.ell = 0.1;
  const MaternField f(g, spec);
  Rng rng(8);
  const auto xi = random_vector(f.latent_size(), rng), r = random_vector(g.size(), rng);
  EXPECT_NEAR(dot(f.window(xi), r), dot(xi, f.pullback(r)), 1e-10);
}

TEST(Matern, WindowCovarianceMatchesLags) {
  Grid2D g;
  g.nx = 10;
  g.nz = 8;
  g.dx = g.dz = 0.05;
  MaternSpec spec;
  spec.ell = 0.1;
  const MaternField f(g, spec);
  const auto c = f.window_covariance();
  EXPECT_NEAR(c(g.index(2, 3), g.index(5, 4)), f.covariance(3, 1), 1e-14);
  EXPECT_NEAR((c - c.transpose()).norm(), 0.0, 1e-14);
}

TEST(Matern, SeededDeterminism) {
  const auto g = square(16, 0.05);
  MaternSpec spec;
  Rng a(9), b(9);
  EXPECT_EQ(sample_matern(spec, g, a), sample_matern(spec, g, b));
}

TEST(Matern, Validation) {
  const auto g = square(16, 0.05);
  MaternSpec spec;
  spec.ell = -1.0;
  EXPECT_THROW(spec.validate(g), ConfigError);
  spec.ell = 0.1;
  spec.nu = 0.0;
  EXPECT_THROW(spec.validate(g), ConfigError);
  spec.nu = 1.0;
  spec.mean_field = std::vector<double>(3, 0.0);
  EXPECT_THROW(spec.validate(g), ShapeError);
}

TEST(LevelSet, PlainConstant) {
  LevelSetSpec spec;
  spec.u_plus = 4.0;
  spec.u_minus = 2.0;
  const std::vector<double> v(30, 1.0);
  for (double x : apply_levelset(spec, v, {}, 0.0)) EXPECT_EQ(x, 4.0);
}

TEST(LevelSet, MixedNegativeGivesBackground) {
  LevelSetSpec spec;
  spec.mode = LevelSetSpec::Mode::mixed;
  spec.background = MaternSpec{};
  Rng rng(10);
  const auto w = random_vector(30, rng);
  const std::vector<double> v(30, -1.0);
  EXPECT_EQ(apply_levelset(spec, v, w, 4.79), w);
}

TEST(LevelSet, CheckerboardTakesPhaseValues) {
  LevelSetSpec spec;
  spec.mode = LevelSetSpec::Mode::mixed;
  spec.background = MaternSpec{};
  Rng rng(11);
  const auto w = random_vector(64, rng);
  std::vector<double> v(64);
  for (int i = 0; i < 64; ++i) v[i] = ((i / 8 + i % 8) % 2) ? 0.3 : -0.3;
  const auto out = apply_levelset(spec, v, w, 4.79);
  for (int i = 0; i < 64; ++i) EXPECT_EQ(out[i], v[i] > 0 ? 4.79 : w[i]);
}

TEST(LevelSet, PlainTakesAtMostTwoValues) {
  LevelSetSpec spec;
  spec.u_plus = 4.5;
  spec.u_minus = 2.0;
  const auto g = square(24, 0.05);
  Rng rng(12);
  const auto v = sample_matern(MaternSpec{}, g, rng);
  const auto out = apply_levelset(spec, v, {}, 0.0);
  EXPECT_LE(std::set<double>(out.begin(), out.end()).size(), 2u);
  EXPECT_EQ(out, apply_levelset(spec, v, {}, 0.0));
}

TEST(LevelSet, MissingBackgroundRejected) {
  LevelSetSpec spec;
  spec.mode = LevelSetSpec::Mode::mixed;
  spec.background = MaternSpec{};
  EXPECT_THROW(apply_levelset(spec, std::vector<double>(4, 1.0), {}, 1.0), ConfigError);
  LevelSetSpec bad;
  bad.mode = LevelSetSpec::Mode::mixed;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(LevelSet, SmoothedIndicator) {
  EXPECT_EQ(smoothed_indicator(0.2, 0.0), 1.0);
  EXPECT_EQ(smoothed_indicator(-0.2, 0.0), 0.0);
  EXPECT_NEAR(smoothed_indicator(0.0, 0.1), 0.5, 1e-15);
  const double h = 1e-6;
  EXPECT_NEAR(smoothed_indicator_derivative(0.03, 0.1),
              (smoothed_indicator(0.03 + h, 0.1) - smoothed_indicator(0.03 - h, 0.1)) / (2 * h), 1e-8);
}

TEST(HyperPrior, Coordinates) {
  const HyperPrior h;
  EXPECT_EQ(h.value(0.0), 3.0);
  EXPECT_NEAR(h.coordinate(4.79), (4.79 - 3.0) / 4.0, 1e-15);
  EXPECT_NEAR(h.value(h.coordinate(4.79)), 4.79, 1e-15);
}
