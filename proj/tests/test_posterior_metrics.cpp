#include <gtest/gtest.h>

#include <cmath>

#include "gibbsfwi/error.hpp"
#include "gibbsfwi/grid_wave.hpp"
#include "gibbsfwi/posterior_metrics.hpp"
#include "gibbsfwi/signal.hpp"
#include "json.hpp"
#include "oracles/sqrtm.hpp"

using namespace gfwi;

namespace {

Eigen::MatrixXd random_spd(int n, Rng& rng, double floor = 0.2) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = z(rng);
  return a * a.transpose() / n + floor * Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd random_mean(int n, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::VectorXd m(n);
  for (int i = 0; i < n; ++i) m[i] = z(rng);
  return m;
}

GaussianApprox random_approx(int n, int rank, double scale, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = z(rng);
  GaussianApprox g;
  g.eigenvectors = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(n, rank);
  g.eigenvalues.resize(rank);
  for (int j = 0; j < rank; ++j) g.eigenvalues[j] = scale / (1.0 + j);
  g.mean.resize(n);
  for (auto& v : g.mean) v = 0.3 * z(rng);
  return g;
}

Seismogram random_seismogram(int ns, int nr, int nt, double dt, Rng& rng) {
  std::normal_distribution<double> z;
  Seismogram s(ns, nr, nt, dt);
  for (auto& v : s.data) v = z(rng);
  return s;
}

}  // namespace

TEST(GaussianW2, IdenticalIsZero) {
  Rng rng(1);
  const DenseGaussian a{random_mean(5, rng), random_spd(5, rng)};
  EXPECT_NEAR(gaussian_w2(a, a), 0.0, 1e-10);
  EXPECT_NEAR(gaussian_w2_squared_general(a, a), 0.0, 1e-10);
}

TEST(GaussianW2, ScalarCase) {
  const DenseGaussian a{Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  const DenseGaussian b{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 4.0)};
  EXPECT_NEAR(gaussian_w2(a, b), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(gaussian_w2_squared_general(a, b), 2.0, 1e-12);
}

TEST(GaussianW2, MatchesSqrtmOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseGaussian a{random_mean(3, rng), random_spd(3, rng)};
    const DenseGaussian b{random_mean(3, rng), random_spd(3, rng)};
    const double expected = oracle::gaussian_w2_squared(a.mean, a.cov, b.mean, b.cov);
    EXPECT_NEAR(gaussian_w2_squared_general(a, b), expected, 1e-9);
  }
}

TEST(GaussianW2, CommutingFormulaAgrees) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_spd(6, rng)).householderQ();
    Eigen::VectorXd d1(6), d2(6);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int i = 0; i < 6; ++i) {
      d1[i] = u(rng);
      d2[i] = u(rng);
    }
    const DenseGaussian a{random_mean(6, rng), q * d1.asDiagonal() * q.transpose()};
    const DenseGaussian b{random_mean(6, rng), q * d2.asDiagonal() * q.transpose()};
    EXPECT_TRUE(covariances_commute(a.cov, b.cov, 1e-10));
    EXPECT_NEAR(gaussian_w2_squared_commuting(a, b), gaussian_w2_squared_general(a, b), 1e-9);
  }
}

TEST(GaussianW2, Symmetric) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseGaussian a{random_mean(7, rng), random_spd(7, rng)};
    const DenseGaussian b{random_mean(7, rng), random_spd(7, rng)};
    EXPECT_NEAR(gaussian_w2(a, b), gaussian_w2(b, a), 1e-12);
    EXPECT_NEAR(gaussian_hellinger(a, b), gaussian_hellinger(b, a), 1e-12);
  }
}

TEST(GaussianW2, TriangleInequality) {
  Rng rng(5);
  const DenseGaussian a{random_mean(4, rng), random_spd(4, rng)};
  const DenseGaussian b{random_mean(4, rng), random_spd(4, rng)};
  const DenseGaussian c{random_mean(4, rng), random_spd(4, rng)};
  EXPECT_LE(gaussian_w2(a, c), gaussian_w2(a, b) + gaussian_w2(b, c) + 1e-12);
}

TEST(GaussianW2, IndefiniteRejected) {
  DenseGaussian a{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  DenseGaussian b{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  b.cov(1, 1) = -1.0;
  EXPECT_THROW(gaussian_w2(a, b), LinearAlgebraError);
  EXPECT_THROW(gaussian_hellinger(a, b), LinearAlgebraError);
}

TEST(GaussianHellinger, KnownValues) {
  const DenseGaussian a{Eigen::Vector2d(0.0, 0.0), Eigen::MatrixXd::Identity(2, 2)};
  const DenseGaussian b{Eigen::Vector2d(2.0, 0.0), Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_NEAR(gaussian_hellinger(a, a), 0.0, 1e-12);
  EXPECT_NEAR(gaussian_hellinger_squared(a, b), 1.0 - std::exp(-0.5), 1e-12);
  const DenseGaussian far{Eigen::Vector2d(1e4, -1e4), 1e-6 * Eigen::MatrixXd::Identity(2, 2)};
  const double h = gaussian_hellinger(a, far);
  EXPECT_LE(h, 1.0);
  EXPECT_GE(h, 0.0);
  EXPECT_NEAR(h, 1.0, 1e-12);
}

TEST(GaussianHellinger, ScalarVarianceFormula) {
  // N(0, s1^2) vs N(0, s2^2): d_H^2 = 1 - sqrt(2 s1 s2 / (s1^2 + s2^2))
  const DenseGaussian a{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  const DenseGaussian b{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 9.0)};
  EXPECT_NEAR(gaussian_hellinger_squared(a, b), 1.0 - std::sqrt(6.0 / 10.0), 1e-12);
}

TEST(LowRank, MatchesDense) {
  Rng rng(6);
  for (int n : {20, 60}) {
    const auto a = random_approx(n, 4, 5.0, rng);
    const auto b = random_approx(n, 5, 2.0, rng);
    const auto da = to_dense(a), db = to_dense(b);
    EXPECT_NEAR(gaussian_w2(a, b), gaussian_w2(da, db), 1e-9);
    EXPECT_NEAR(gaussian_hellinger_squared(a, b), gaussian_hellinger_squared(da, db), 1e-9);
    EXPECT_NEAR(gaussian_w2(a, a), 0.0, 1e-7);
  }
}

TEST(LowRank, SharedBasisAndZeroRank) {
  Rng rng(7);
  auto a = random_approx(30, 3, 4.0, rng);
  auto b = a;
  b.eigenvalues *= 0.5;
  EXPECT_NEAR(gaussian_w2(a, b), gaussian_w2(to_dense(a), to_dense(b)), 1e-9);
  GaussianApprox prior;
  prior.mean.assign(30, 0.0);
  prior.eigenvalues.resize(0);
  prior.eigenvectors.resize(30, 0);
  EXPECT_NEAR(gaussian_w2(prior, a), gaussian_w2(to_dense(prior), to_dense(a)), 1e-9);
  EXPECT_NEAR(gaussian_w2(prior, prior), 0.0, 1e-14);
}

TEST(Pushforward, MatchesExplicitOperator) {
  const Grid2D g{9, 8, 0.1, 0.1};
  const MaternField field(g, MaternSpec{1.0, 2.0, 0.2});
  Rng rng(8);
  const auto approx = random_approx(static_cast<int>(field.latent_size()), 3, 3.0, rng);
  const std::size_t n = field.latent_size();
  Eigen::MatrixXd m(g.size(), n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    const auto col = field.window(e);
    for (std::size_t i = 0; i < col.size(); ++i) m(i, j) = col[i];
  }
  const auto push = pushforward_to_grid(approx, field);
  const Eigen::MatrixXd expected = m * approx.dense_covariance() * m.transpose();
  EXPECT_LT((push.cov - expected).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::VectorXd mean = m * Eigen::Map<const Eigen::VectorXd>(approx.mean.data(), n);
  EXPECT_LT((push.mean - mean).cwiseAbs().maxCoeff(), 1e-10);
  const auto f = field.field(approx.mean);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(push.mean[i], f[i], 1e-10);
}

TEST(HellingerIs, IdenticalDataIsZero) {
  const PotentialFn phi = [](std::span<const double> u) { return 0.5 * (u[0] - 1.0) * (u[0] - 1.0) / 0.25; };
  const PriorDraw draw = [](Rng& r) { return standard_normal(1, r); };
  Rng rng(9);
  const auto est = hellinger_is(phi, phi, draw, 2000, rng);
  EXPECT_EQ(est.value, 0.0);
  EXPECT_FALSE(est.unreliable);
}

TEST(HellingerIs, ConjugateToyMatchesClosedForm) {
  // prior N(0, 1), Phi(u; y) = (u - y)^2 / (2 s^2): posterior N(y / (1 + s^2), s^2 / (1 + s^2))
  const double s = 0.8, y1 = 0.4, y2 = 1.4;
  const PotentialFn p1 = [&](std::span<const double> u) { return 0.5 * (u[0] - y1) * (u[0] - y1) / (s * s); };
  const PotentialFn p2 = [&](std::span<const double> u) { return 0.5 * (u[0] - y2) * (u[0] - y2) / (s * s); };
  const PriorDraw draw = [](Rng& r) { return standard_normal(1, r); };
  const double v = s * s / (1 + s * s);
  const DenseGaussian a{Eigen::VectorXd::Constant(1, y1 / (1 + s * s)), Eigen::MatrixXd::Constant(1, 1, v)};
  const DenseGaussian b{Eigen::VectorXd::Constant(1, y2 / (1 + s * s)), Eigen::MatrixXd::Constant(1, 1, v)};
  const double exact = gaussian_hellinger_squared(a, b);
  Rng rng(10);
  const auto est = hellinger_is(p1, p2, draw, 20000, rng, 200, 2);
  EXPECT_GT(est.standard_error, 0.0);
  EXPECT_NEAR(est.value, exact, 3 * est.standard_error);
}

TEST(HellingerIs, AlwaysInUnitInterval) {
  const PriorDraw draw = [](Rng& r) { return standard_normal(2, r); };
  Rng rng(11);
  for (double shift : {0.0, 0.5, 5.0, 50.0}) {
    const PotentialFn p1 = [](std::span<const double> u) { return 10.0 * u[0] * u[0]; };
    const PotentialFn p2 = [shift](std::span<const double> u) { return 10.0 * (u[0] - shift) * (u[0] - shift) + u[1]; };
    const auto est = hellinger_is(p1, p2, draw, 500, rng);
    EXPECT_GE(est.value, 0.0);
    EXPECT_LE(est.value, 1.0);
  }
}

TEST(HellingerIs, FlagsDegenerateWeights) {
  const PriorDraw draw = [](Rng& r) { return standard_normal(1, r); };
  const PotentialFn sharp = [](std::span<const double> u) { return 1e6 * (u[0] - 2.0) * (u[0] - 2.0); };
  Rng rng(12);
  const auto est = hellinger_is(sharp, sharp, draw, 200, rng);
  EXPECT_TRUE(est.unreliable);
}

TEST(HellingerIs, ShrinkingPerturbationsDecrease) {
  const PriorDraw draw = [](Rng& r) { return standard_normal(3, r); };
  const double y[3] = {0.5, -0.3, 0.8};
  std::vector<HellingerEstimate> est;
  for (double amp : {1.0, 0.25, 0.0625, 0.015625}) {
    const PotentialFn p1 = [&](std::span<const double> u) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += (u[i] - y[i]) * (u[i] - y[i]);
      return s / (2 * 0.25);
    };
    const PotentialFn p2 = [&, amp](std::span<const double> u) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += (u[i] - y[i] - amp) * (u[i] - y[i] - amp);
      return s / (2 * 0.25);
    };
    Rng rng(13);
    est.push_back(hellinger_is(p1, p2, draw, 5000, rng));
  }
  for (std::size_t k = 1; k < est.size(); ++k)
    EXPECT_LE(est[k].value, est[k - 1].value + est[k - 1].standard_error) << k;
  // d_H / |y - y'| stays bounded
  double amp = 1.0;
  for (const auto& e : est) {
    EXPECT_LT(std::sqrt(e.value) / (std::sqrt(3.0) * amp), 2.0);
    amp /= 4;
  }
}

TEST(Noise, ZeroAmplitudeLeavesDataUnchanged) {
  Rng rng(14);
  const auto y = random_seismogram(2, 3, 100, 0.01, rng);
  const auto noisy = make_noise(y, rng, 0.0);
  EXPECT_EQ(noisy.data.data, y.data);
  EXPECT_TRUE(std::isinf(noisy.snr_db));
}

TEST(Noise, ZeroDataGivesSharedTemporalNoise) {
  Seismogram y(2, 3, 50, 0.01);
  Rng rng(15);
  const auto noisy = make_noise(y, rng, 0.7);
  for (std::size_t t = 0; t < noisy.data.trace_count(); ++t) {
    const auto tr = noisy.data.trace(t);
    for (int k = 0; k < 50; ++k) EXPECT_EQ(tr[k], noisy.eta0[k]);
  }
}

TEST(Noise, EnvelopeFollowsFormula) {
  Rng rng(16);
  const auto y = random_seismogram(1, 2, 80, 0.01, rng);
  const auto noisy = make_noise(y, rng, 0.3);
  double ymax = 0.0;
  for (double v : y.data) ymax = std::max(ymax, std::abs(v));
  for (std::size_t t = 0; t < y.trace_count(); ++t)
    for (int k = 0; k < 80; ++k)
      EXPECT_NEAR(noisy.data.trace(t)[k] - y.trace(t)[k], (1 + y.trace(t)[k] / ymax) * noisy.eta0[k], 1e-12);
}

TEST(Noise, HitsTargetSnr) {
  Rng rng(17);
  const auto y = random_seismogram(3, 4, 400, 0.005, rng);
  Rng r1(18), r2(18);
  const auto noisy = make_noise_snr(y, r1, 14.6);
  EXPECT_NEAR(noisy.snr_db, 14.6, 0.1);
  EXPECT_NEAR(snr_db(y, noisy.data), 14.6, 0.1);
  const auto again = make_noise(y, r2, noisy.amplitude);
  EXPECT_EQ(again.data.data, noisy.data.data);
}

TEST(Noise, NegativeSobolevShareShrinksWithResolution) {
  // white noise concentrates at high frequency, where H^-1 is weak
  std::vector<double> ratio;
  for (int nt : {250, 500, 1000, 2000}) {
    const double dt = 2.0 / nt;
    Seismogram y(1, 1, nt, dt);
    for (int k = 0; k < nt; ++k) y.data[k] = std::sin(3.0 * k * dt);
    Rng rng(19);
    auto noisy = make_noise(y, rng, 0.1);
    std::vector<double> eta(nt);
    for (int k = 0; k < nt; ++k) eta[k] = noisy.data.data[k] - y.data[k];
    remove_zero_frequency_inplace(eta);
    double l2 = 0.0;
    for (double v : eta) l2 += v * v * dt;
    ratio.push_back(hminus1_norm(eta, dt) / std::sqrt(l2));
  }
  for (std::size_t k = 1; k < ratio.size(); ++k) EXPECT_LT(ratio[k], ratio[k - 1]);
}

TEST(StabilityReport, IdenticalDataGivesZeros) {
  Rng rng(20);
  const DenseGaussian a{random_mean(4, rng), random_spd(4, rng)};
  const auto y = random_seismogram(1, 2, 60, 0.01, rng);
  std::vector<StabilityInput> runs = {{PotentialKind::L2, a, a}, {PotentialKind::W2, a, a}, {PotentialKind::Hm1, a, a}};
  const auto rep = stability_report(runs, y, y, Grid2D{2, 2, 1.0, 1.0}, 14.6, 21);
  ASSERT_EQ(rep.entries.size(), 3u);
  for (const auto& e : rep.entries) EXPECT_NEAR(*e.distance_w2, 0.0, 1e-10);
  EXPECT_EQ(rep.norm_l2, 0.0);
  EXPECT_EQ(rep.norm_hm1, 0.0);
}

TEST(StabilityReport, MissingApproximationMarkedAbsent) {
  Rng rng(22);
  const DenseGaussian a{random_mean(3, rng), random_spd(3, rng)};
  const auto y = random_seismogram(1, 1, 40, 0.01, rng);
  std::vector<StabilityInput> runs = {{PotentialKind::L2, a, std::nullopt}, {PotentialKind::W2, a, a}};
  const auto rep = stability_report(runs, y, y, Grid2D{3, 1, 1.0, 1.0}, 10.0, 1);
  EXPECT_FALSE(rep.find(PotentialKind::L2)->distance_w2.has_value());
  EXPECT_TRUE(rep.find(PotentialKind::W2)->distance_w2.has_value());
  EXPECT_FALSE(rep.ordering_holds().has_value());
  EXPECT_EQ(rep.find(PotentialKind::M), nullptr);
}

TEST(StabilityReport, SerializesRowsAndReferences) {
  Rng rng(23);
  const DenseGaussian a{random_mean(3, rng), random_spd(3, rng)};
  const DenseGaussian b{random_mean(3, rng), random_spd(3, rng)};
  const DenseGaussian c{a.mean, 2.0 * a.cov};
  auto y = random_seismogram(1, 2, 50, 0.01, rng);
  remove_zero_frequency_inplace(y);
  Rng nrng(24);
  const auto noisy = make_noise(y, nrng, 0.2);
  std::vector<StabilityInput> runs = {{PotentialKind::L2, a, b}, {PotentialKind::W2, a, c}, {PotentialKind::Hm1, a, a}};
  const auto rep = stability_report(runs, y, noisy.data, Grid2D{3, 1, 1.0, 1.0}, noisy.snr_db, 24);
  EXPECT_GT(rep.norm_l2, rep.norm_hm1);
  EXPECT_EQ(rep.ordering_holds(), rep.find(PotentialKind::L2)->distance_w2 > rep.find(PotentialKind::W2)->distance_w2 &&
                                      rep.find(PotentialKind::W2)->distance_w2 > rep.find(PotentialKind::Hm1)->distance_w2);
  EXPECT_DOUBLE_EQ(*reference_distance(PotentialKind::L2), 9.34);
  EXPECT_DOUBLE_EQ(*reference_distance(PotentialKind::Hm1), 2.83);
  EXPECT_DOUBLE_EQ(*reference_distance(PotentialKind::W2), 6.60);
  EXPECT_FALSE(reference_distance(PotentialKind::M).has_value());

  const auto j = nlohmann::json::parse(rep.to_json());
  ASSERT_TRUE(j.contains("rows"));
  ASSERT_EQ(j["rows"].size(), 3u);
  for (const auto& row : j["rows"]) {
    for (const char* key : {"potential", "distance_w2", "norm_l2", "norm_hm1", "snr_db", "grid", "seed"})
      EXPECT_TRUE(row.contains(key)) << key;
  }
  EXPECT_EQ(j["rows"][0]["potential"], "L2");
  EXPECT_DOUBLE_EQ(j["rows"][0]["distance_w2"].get<double>(), *rep.entries[0].distance_w2);

  const auto csv = rep.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.rfind("potential,", 0), 0u);
}
