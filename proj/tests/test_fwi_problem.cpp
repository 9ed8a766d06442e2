#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "gibbsfwi/error.hpp"
#include "gibbsfwi/fwi_problem.hpp"
#include "gibbsfwi/inference.hpp"
#include "oracles/finite_difference.hpp"
#include "support/scenes.hpp"

using namespace gfwi;
using testing_support::random_vector;

namespace {

struct Setup {
  testing_support::Scene scene;
  std::shared_ptr<WaveSolver> solver;
  std::shared_ptr<GaussianFieldParameterization> param;
};

Setup make_setup(double water_depth = 0.0) {
  Setup s;
  s.scene = testing_support::small_scene(24, 16, 2, 6, 0.05, 0.6, 6.0);
  s.scene.grid.water_depth = water_depth;
  s.solver = std::make_shared<WaveSolver>(s.scene.grid, s.scene.geometry, s.scene.options, s.scene.v_max);
  MaternSpec spec{0.7, 2.0, 0.15};
  spec.mean_value = 0.3;
  s.param = std::make_shared<GaussianFieldParameterization>(MaternField(s.scene.grid, spec),
                                                            SlownessMap(s.scene.v_min, s.scene.v_max));
  return s;
}

Seismogram observe(const WaveSolver& solver, const Parameterization& p, std::span<const double> xi) {
  return remove_zero_frequency(solver.forward(p.slowness2(xi)));
}

std::vector<double> apply_map(const LinearMap& h, const std::vector<double>& v) {
  std::vector<double> out(v.size());
  h(v, out);
  return out;
}

void check_adjoint(const Parameterization& p, std::span<const double> xi, Rng& rng) {
  const auto v = random_vector(p.dimension(), rng);
  const auto g = random_vector(p.grid().size(), rng);
  const auto jv = p.push_forward(xi, v);
  const auto jtg = p.pullback(xi, g);
  const double lhs = testing_support::dot(jv, g), rhs = testing_support::dot(v, jtg);
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
}

}  // namespace

TEST(GaussianFieldParam, JacobianMatchesFiniteDifferences) {
  const auto s = make_setup(0.2);
  Rng rng(1);
  const auto xi = standard_normal(s.param->dimension(), rng);
  const auto v = random_vector(s.param->dimension(), rng);
  const auto jv = s.param->push_forward(xi, v);
  const double h = 1e-6;
  std::vector<double> xp(xi), xm(xi);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    xp[i] += h * v[i];
    xm[i] -= h * v[i];
  }
  const auto mp = s.param->slowness2(xp), mm = s.param->slowness2(xm);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < jv.size(); ++i) {
    err = std::max(err, std::abs((mp[i] - mm[i]) / (2 * h) - jv[i]));
    ref = std::max(ref, std::abs(jv[i]));
  }
  EXPECT_LT(err, 1e-6 * ref);
  check_adjoint(*s.param, xi, rng);
}

TEST(GaussianFieldParam, WaterCellsHoldWaterVelocity) {
  const auto s = make_setup(0.2);
  Rng rng(2);
  const auto xi = standard_normal(s.param->dimension(), rng);
  const auto m = s.param->slowness2(xi);
  const auto v = random_vector(s.param->dimension(), rng);
  const auto jv = s.param->push_forward(xi, v);
  const auto& g = s.param->grid();
  int water = 0;
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) {
      const auto i = g.index(ix, iz);
      if (g.is_water(iz)) {
        ++water;
        EXPECT_DOUBLE_EQ(m[i], 1.0 / (1.5 * 1.5));
        EXPECT_EQ(jv[i], 0.0);
      } else {
        EXPECT_GT(1.0 / std::sqrt(m[i]), s.scene.v_min);
        EXPECT_LT(1.0 / std::sqrt(m[i]), s.scene.v_max);
      }
    }
  EXPECT_GT(water, 0);
}

TEST(MixedLevelSetParam, JacobianAndAdjoint) {
  const auto scene = testing_support::small_scene(16, 12, 1, 4);
  MaternField level(scene.grid, MaternSpec{1.0, 2.0, 0.15});
  std::vector<double> bg(scene.grid.size(), 1.0 / (2.5 * 2.5));
  const MixedLevelSetParameterization p(level, bg, HyperPrior{3.0, 0.5}, 0.3, 1.5, 4.5);
  Rng rng(3);
  auto xi = standard_normal(p.dimension(), rng);
  xi.back() = 0.4;
  const auto v = random_vector(p.dimension(), rng);
  const auto jv = p.push_forward(xi, v);
  const double h = 1e-6;
  std::vector<double> xp(xi), xm(xi);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    xp[i] += h * v[i];
    xm[i] -= h * v[i];
  }
  const auto mp = p.slowness2(xp), mm = p.slowness2(xm);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < jv.size(); ++i) {
    err = std::max(err, std::abs((mp[i] - mm[i]) / (2 * h) - jv[i]));
    ref = std::max(ref, std::abs(jv[i]));
  }
  EXPECT_LT(err, 1e-5 * ref);
  check_adjoint(p, xi, rng);
  EXPECT_NEAR(p.salt_velocity(xi), 3.2, 1e-12);
}

TEST(MixedLevelSetParam, SaltVelocityClamped) {
  const auto scene = testing_support::small_scene(16, 12, 1, 4);
  MaternField level(scene.grid, MaternSpec{1.0, 2.0, 0.15});
  std::vector<double> bg(scene.grid.size(), 1.0 / (2.5 * 2.5));
  const MixedLevelSetParameterization p(level, bg, HyperPrior{3.0, 4.0}, 0.0, 1.5, 4.5);
  std::vector<double> xi(p.dimension(), 0.0);
  xi.back() = 10.0;
  EXPECT_EQ(p.salt_velocity(xi), 4.5);
  // zeta has no influence beyond the clamp
  std::vector<double> g(p.grid().size(), 1.0);
  EXPECT_EQ(p.pullback(xi, g).back(), 0.0);
  xi.back() = -10.0;
  EXPECT_EQ(p.salt_velocity(xi), 1.5);
  const auto ind = p.indicator(xi);
  for (double v : ind) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(FwiProblem, PotentialIsScaledRawLoss) {
  const auto s = make_setup();
  Rng rng(4);
  const auto truth = standard_normal(s.param->dimension(), rng);
  PotentialSpec spec;
  spec.beta = 3.0;
  spec.norm_constant = 0.5;
  const FwiProblem p(s.solver, s.param, spec, observe(*s.solver, *s.param, truth));
  const std::vector<double> xi(p.dimension(), 0.0);
  EXPECT_NEAR(p.potential(xi), 6.0 * p.raw_loss(xi).value, 1e-12 * p.potential(xi));
  EXPECT_EQ(p.potential(truth), 0.0);
}

TEST(FwiProblem, GradientMatchesFiniteDifferences) {
  const auto s = make_setup(0.1);
  Rng rng(5);
  auto truth = standard_normal(s.param->dimension(), rng);
  const auto y = observe(*s.solver, *s.param, truth);
  for (PotentialKind kind : {PotentialKind::L2, PotentialKind::Hm1, PotentialKind::W2}) {
    PotentialSpec spec;
    spec.kind = kind;
    if (kind == PotentialKind::W2) spec.normalizer = default_normalizer(y);
    const FwiProblem p(s.solver, s.param, spec, y);
    const std::vector<double> xi(p.dimension(), 0.0);
    const auto d = random_vector(p.dimension(), rng);
    std::vector<double> g(p.dimension());
    p.potential_and_gradient(xi, g);
    const auto r = oracle::directional_fd([&](std::span<const double> x) { return p.potential(x); }, xi, d,
                                          testing_support::dot(g, d), {1e-2, 3e-3, 1e-3, 3e-4, 1e-4});
    EXPECT_LT(r.relative_error, kind == PotentialKind::W2 ? 1e-3 : 1e-4) << to_string(kind);
  }
}

TEST(FwiProblem, MapAtPriorMeanWhenDataMatchesIt) {
  const auto s = make_setup();
  const std::vector<double> zero(s.param->dimension(), 0.0);
  const FwiProblem p(s.solver, s.param, PotentialSpec{}, observe(*s.solver, *s.param, zero));
  std::vector<double> g(p.dimension());
  EXPECT_EQ(p.potential_and_gradient(zero, g), 0.0);
  for (double v : g) EXPECT_EQ(v, 0.0);
  const auto r = map_estimate(p, zero);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  for (double x : r.xi) EXPECT_EQ(x, 0.0);
}

TEST(FwiProblem, GaussNewtonIsSymmetricPsd) {
  const auto s = make_setup();
  Rng rng(6);
  const auto truth = standard_normal(s.param->dimension(), rng);
  const auto y = observe(*s.solver, *s.param, truth);
  for (PotentialKind kind : {PotentialKind::L2, PotentialKind::W2}) {
    PotentialSpec spec;
    spec.kind = kind;
    if (kind == PotentialKind::W2) spec.normalizer = default_normalizer(y);
    const FwiProblem p(s.solver, s.param, spec, y);
    const std::vector<double> xi(p.dimension(), 0.0);
    const auto h = p.linearize(xi);
    const auto v = random_vector(p.dimension(), rng), w = random_vector(p.dimension(), rng);
    const auto hv = apply_map(h, v), hw = apply_map(h, w);
    const double a = testing_support::dot(hv, w), b = testing_support::dot(v, hw);
    EXPECT_NEAR(a, b, 1e-8 * std::max(std::abs(a), std::abs(b))) << to_string(kind);
    EXPECT_GE(testing_support::dot(hv, v), 0.0);
    EXPECT_GE(testing_support::dot(hw, w), 0.0);
  }
}

TEST(FwiProblem, GaussNewtonMatchesHessianAtTruth) {
  // with zero residual the L2 Gauss-Newton operator equals the Hessian
  const auto s = make_setup();
  Rng rng(7);
  const auto truth = standard_normal(s.param->dimension(), rng);
  const FwiProblem p(s.solver, s.param, PotentialSpec{}, observe(*s.solver, *s.param, truth));
  const auto v = random_vector(p.dimension(), rng);
  const auto hv = apply_map(p.linearize(truth), v);
  const double eps = 1e-4;
  std::vector<double> xp(truth), xm(truth), gp(p.dimension()), gm(p.dimension());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    xp[i] += eps * v[i];
    xm[i] -= eps * v[i];
  }
  p.potential_and_gradient(xp, gp);
  p.potential_and_gradient(xm, gm);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < hv.size(); ++i) {
    const double fd = (gp[i] - gm[i]) / (2 * eps);
    err += (fd - hv[i]) * (fd - hv[i]);
    ref += hv[i] * hv[i];
  }
  EXPECT_LT(std::sqrt(err / ref), 1e-4);
}

TEST(FwiProblem, RejectsMismatchedGrids) {
  const auto s = make_setup();
  auto other = testing_support::small_scene(20, 16, 1, 4);
  auto param = std::make_shared<GaussianFieldParameterization>(MaternField(other.grid, MaternSpec{}),
                                                               SlownessMap(1.5, 4.5));
  Seismogram y;
  EXPECT_THROW(FwiProblem p(s.solver, param, PotentialSpec{}, y), ShapeError);
}
